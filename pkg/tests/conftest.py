"""Shared fixtures and samplers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from divergelane import (
    CostCoefficients,
    DataPoint,
    DemandConfig,
    DivergeInstance,
    solve_fixed_point,
    uniqueness_margins,
)

#: Symmetric calibrated coefficients used as the reference diverge throughout.
CAL_VAL = CostCoefficients(
    cf1=1.45, cf2=1.45, cb=1.45,
    lambda1=0.87, lambda2=0.87,
    mu1=0.69, mu2=0.69,
    nu=1.0,
)

#: Demand protocol: exit-1 demands in vph at a fixed total of 3000 vph.
PROTOCOL_TOTAL_VPH = 3000.0
PROTOCOL_SWEEP_VPH = tuple(float(d) for d in range(1150, 1851, 50))


@pytest.fixture
def cal_val() -> CostCoefficients:
    return CAL_VAL


def random_coefficients(rng: np.random.Generator) -> CostCoefficients:
    """Draw coefficients from the property-test ranges (rates in [1, 5],
    factors in [0.1, 1], heterogeneity in [0.1, 3])."""
    cf1, cf2, cb = rng.uniform(1.0, 5.0, 3)
    lam1, lam2, mu1, mu2 = rng.uniform(0.1, 1.0, 4)
    nu = rng.uniform(0.1, 3.0)
    return CostCoefficients(cf1, cf2, cb, lam1, lam2, mu1, mu2, nu)


def random_uniqueness_instance(rng: np.random.Generator) -> DivergeInstance:
    """Random instance whose coefficients satisfy the uniqueness condition
    on both links."""
    while True:
        c = random_coefficients(rng)
        m1, m2 = uniqueness_margins(c)
        if m1 >= 0.0 and m2 >= 0.0:
            break
    q1 = float(rng.uniform(0.02, 0.98))
    return DivergeInstance(DemandConfig(q1, 1.0 - q1), c)


def noiseless_protocol_dataset(
    c: CostCoefficients = CAL_VAL,
    sweep_vph: tuple[float, ...] = PROTOCOL_SWEEP_VPH,
    total_vph: float = PROTOCOL_TOTAL_VPH,
) -> list[DataPoint]:
    """Dataset of solver equilibria over the demand protocol."""
    points = []
    for d1 in sweep_vph:
        demand = DemandConfig(d1 / total_vph, 1.0 - d1 / total_vph)
        report = solve_fixed_point(DivergeInstance(demand, c))
        assert report.converged
        points.append(DataPoint(demand=demand, flow=report.flow, total_demand_vph=total_vph))
    return points
