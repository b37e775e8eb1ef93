"""Synthetic steady-state lane-share data from discrete driver dynamics.

Stands in for a microscopic traffic simulator: a fixed population of
drivers, split between the two destinations, repeatedly re-picks the
cheaper of its two lanes where "cheaper" is the model cost at the current
aggregate shares plus an independent uniform perception error.  After a
fixed number of update rounds the aggregate shares are reported as one data
point.  With the imperfection parameter at zero this is plain best-response
dynamics and converges to the model equilibrium up to the 1/n quantization
of shares; with noise the reported shares scatter around a slightly
displaced steady state, which is exactly the kind of data the calibration
module is meant to digest.

All randomness comes from one seeded generator per run: a permutation of
the drivers followed by a flat block of perception noise per round, so runs
are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .calibration import DataPoint
from .model import CostCoefficients, DemandConfig, DivergeInstance, FlowDistribution

#: Perception-noise scale relative to the lane cost rates: the noise is
#: uniform in +/- sigma * NOISE_COST_FRACTION * (cf_i + cb).
NOISE_COST_FRACTION = 0.05


@dataclass(frozen=True)
class SimulationConfig:
    """Protocol parameters for one synthetic data-collection campaign.

    ``demand_sweep`` lists the exit-1 demands (vph) to visit; each entry
    becomes one data point with ``q1 = d1 / total_demand_vph``.
    """

    n_vehicles: int = 5000
    sigma: float = 0.5
    rounds: int = 500
    seed: int = 1
    total_demand_vph: float = 3000.0
    demand_sweep: tuple[float, ...] = tuple(float(d) for d in range(1150, 1851, 50))

    def __post_init__(self) -> None:
        if self.n_vehicles < 1:
            raise ValueError(f"n_vehicles must be >= 1, got {self.n_vehicles}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in [0, 1], got {self.sigma!r}")
        if not self.total_demand_vph > 0:
            raise ValueError(f"total_demand_vph must be > 0, got {self.total_demand_vph!r}")
        for d in self.demand_sweep:
            if not 0.0 < d < self.total_demand_vph:
                raise ValueError(
                    f"sweep demand {d!r} outside (0, {self.total_demand_vph!r})"
                )


def simulate_steady_state(g_true: DivergeInstance, cfg: SimulationConfig) -> DataPoint:
    """Run the driver dynamics once and report the final aggregate shares.

    Destination counts are the demand shares rounded to integers with the
    remainder assigned to link 1, so the reported proportions satisfy flow
    conservation exactly (integer counts over the common denominator
    ``n_vehicles``); the data point's demand is the realized integer split.
    Deterministic for a fixed seed.
    """
    c = g_true.costs
    n = cfg.n_vehicles
    n2 = int(round(n * g_true.demand.q2))
    n1 = n - n2
    rng = np.random.default_rng(cfg.seed)

    links = [1] * n1 + [2] * n2
    lanes = [0] * n  # 0 = feed-through, 1 = bifurcating
    counts_f = [0, n1, n2]  # index by link, entry 0 unused
    counts_b = [0, 0, 0]
    inv_n = 1.0 / n

    amplitude = [
        0.0,
        cfg.sigma * NOISE_COST_FRACTION * (c.cf1 + c.cb),
        cfg.sigma * NOISE_COST_FRACTION * (c.cf2 + c.cb),
    ]
    noisy = cfg.sigma > 0.0

    cf = [0.0, c.cf1, c.cf2]
    lam = [0.0, c.lambda1, c.lambda2]
    mu = [0.0, c.mu1, c.mu2]
    cb, nu = c.cb, c.nu

    # Lane costs at the current aggregate shares; recomputed only when a
    # driver actually switches.
    feed_cost = [0.0, 0.0, 0.0]
    bif_cost = [0.0, 0.0, 0.0]

    def recompute() -> None:
        xb1 = counts_b[1] * inv_n
        xb2 = counts_b[2] * inv_n
        feed_cost[1] = cf[1] * counts_f[1] * inv_n
        feed_cost[2] = cf[2] * counts_f[2] * inv_n
        heterogeneity = nu * xb1 * xb2
        bif_cost[1] = cb * (lam[1] * xb1 + mu[1] * xb2) + heterogeneity
        bif_cost[2] = cb * (lam[2] * xb2 + mu[2] * xb1) + heterogeneity

    recompute()
    for _ in range(cfg.rounds):
        order = rng.permutation(n).tolist()
        if noisy:
            draws = rng.uniform(-1.0, 1.0, size=2 * n)
            noise_f = draws[:n].tolist()
            noise_b = draws[n:].tolist()
        switched = 0
        for position, driver in enumerate(order):
            link = links[driver]
            perceived_f = feed_cost[link]
            perceived_b = bif_cost[link]
            if noisy:
                a = amplitude[link]
                perceived_f += a * noise_f[position]
                perceived_b += a * noise_b[position]
            if perceived_b < perceived_f:
                target = 1
            elif perceived_f < perceived_b:
                target = 0
            else:
                target = lanes[driver]
            if target != lanes[driver]:
                lanes[driver] = target
                if target == 1:
                    counts_f[link] -= 1
                    counts_b[link] += 1
                else:
                    counts_f[link] += 1
                    counts_b[link] -= 1
                switched += 1
                recompute()
        if switched == 0:
            break

    demand = DemandConfig(n1 * inv_n, n2 * inv_n)
    flow = FlowDistribution(
        counts_f[1] * inv_n,
        counts_b[1] * inv_n,
        counts_f[2] * inv_n,
        counts_b[2] * inv_n,
    )
    return DataPoint(demand=demand, flow=flow, total_demand_vph=cfg.total_demand_vph)


def generate_dataset(c_true: CostCoefficients, cfg: SimulationConfig) -> list[DataPoint]:
    """One simulated data point per sweep entry, seeded as ``seed + k``."""
    if not cfg.demand_sweep:
        raise ValueError("demand_sweep must be non-empty")
    points = []
    for k, d1 in enumerate(cfg.demand_sweep):
        q1 = d1 / cfg.total_demand_vph
        instance = DivergeInstance(DemandConfig(q1, 1.0 - q1), c_true)
        points.append(simulate_steady_state(instance, replace(cfg, seed=cfg.seed + k)))
    return points
