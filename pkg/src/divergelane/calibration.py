"""Recover cost coefficients from steady-state lane-share data.

Calibration minimizes the number of equilibrium conditions a coefficient
vector violates over a set of observed (demand, flow) tuples.  Each of the
four conditions per data point is a sign constraint on a product that is
affine in a *linearized* coefficient vector: the bifurcating rate multiplied
by a capacity factor is treated as a single variable (``cb_lambda1 = cb *
lambda1`` and so on), which keeps every constraint linear while the factors
themselves are recovered by division afterwards.

Two solvers share that encoding:

* :func:`calibrate_exact` — branch and bound over the per-condition
  indicator assignment with a linear-feasibility subproblem per node,
  returning a provably minimal violation count (guarded to small instances).
* :func:`calibrate_search` — seeded multi-start randomized search with
  coordinate refinement, scalable to any size but only a heuristic
  certificate.

The indicator/big-M inequality system itself is available through
:func:`build_milp` as a self-contained description.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .model import (
    FACTOR_FLOOR,
    CostCoefficients,
    DemandConfig,
    FeasibilityError,
    FlowDistribution,
    check_feasible,
    check_uniqueness_condition,
    uniqueness_margins,
)

COEFFICIENT_NAMES = ("cf1", "cf2", "cb", "lambda1", "lambda2", "mu1", "mu2", "nu")
RATE_NAMES = ("cf1", "cf2", "cb", "nu")
FACTOR_NAMES = ("lambda1", "lambda2", "mu1", "mu2")
CONDITION_NAMES = ("f1", "b1", "f2", "b2")

DEFAULT_LOWER_BOUNDS: dict[str, float] = {
    **{name: 1.0 for name in RATE_NAMES},
    **{name: FACTOR_FLOOR for name in FACTOR_NAMES},
}
DEFAULT_UPPER_BOUNDS: dict[str, float] = {
    **{name: 10.0 for name in RATE_NAMES},
    **{name: 1.0 for name in FACTOR_NAMES},
}

_LP_OPTIONS = {
    "presolve": True,
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
}


class ConfigurationError(ValueError):
    """Calibration options are inconsistent (e.g. a lower bound above an upper)."""


class ExactSolverGuardError(RuntimeError):
    """The instance exceeds the exact solver's binary-count guard."""


@dataclass(frozen=True)
class DataPoint:
    """One calibration tuple: demand split, observed flow split, and the
    total demand in vehicles per hour (bookkeeping only)."""

    demand: DemandConfig
    flow: FlowDistribution
    total_demand_vph: float = 0.0

    def __post_init__(self) -> None:
        check_feasible(self.demand, self.flow)


@dataclass(frozen=True)
class CalibrationOptions:
    """Knobs shared by both calibration solvers.

    ``big_m`` and ``epsilon`` parametrize the indicator encoding (``epsilon``
    doubles as the violation-counting margin, so it should be scaled to the
    data's noise floor: 1e-6 suits solver-generated data, while simulator
    output typically needs 1e-3 to 1e-2).  ``lower_bounds``/``upper_bounds``
    override the default coefficient box (rates in [1, 10], factors in
    (0, 1]).
    """

    big_m: float = 1e3
    epsilon: float = 1e-6
    symmetry: bool = False
    lower_bounds: Mapping[str, float] | None = None
    upper_bounds: Mapping[str, float] | None = None
    solver: str = "heuristic"
    restarts: int = 200
    seed: int = 0
    max_exact_binaries: int = 28

    def __post_init__(self) -> None:
        if not self.big_m > 0:
            raise ValueError(f"big_m must be > 0, got {self.big_m!r}")
        if not 0 < self.epsilon < self.big_m:
            raise ValueError(
                f"epsilon must lie in (0, big_m), got {self.epsilon!r} with big_m {self.big_m!r}"
            )
        if self.solver not in ("exact", "heuristic"):
            raise ValueError(f"solver must be 'exact' or 'heuristic', got {self.solver!r}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_exact_binaries < 4:
            raise ValueError(f"max_exact_binaries must be >= 4, got {self.max_exact_binaries}")
        for mapping in (self.lower_bounds, self.upper_bounds):
            if mapping is not None:
                unknown = set(mapping) - set(COEFFICIENT_NAMES)
                if unknown:
                    raise ValueError(f"unknown coefficient names in bounds: {sorted(unknown)}")


@dataclass(frozen=True)
class ViolationCount:
    """Output of :func:`count_violations`.

    ``flags`` holds one boolean per (point, condition) in the order
    (f1, b1, f2, b2); ``positive_sum`` is the sum of the flagged products,
    the tie-breaking quantity of the randomized search.
    """

    count: int
    flags: tuple[tuple[bool, bool, bool, bool], ...]
    products: np.ndarray = field(repr=False)
    positive_sum: float = 0.0


@dataclass(frozen=True)
class CalibrationResult:
    coefficients: CostCoefficients
    violations: int
    indicator_assignment: tuple[tuple[bool, bool, bool, bool], ...]
    certificate: str
    uniqueness: tuple[bool, bool]


# ---------------------------------------------------------------------------
# Shared encoding helpers


@dataclass(frozen=True)
class _Arrays:
    xf1: np.ndarray
    xb1: np.ndarray
    xf2: np.ndarray
    xb2: np.ndarray


def _data_arrays(data: Sequence[DataPoint]) -> _Arrays:
    return _Arrays(
        xf1=np.array([p.flow.xf1 for p in data]),
        xb1=np.array([p.flow.xb1 for p in data]),
        xf2=np.array([p.flow.xf2 for p in data]),
        xb2=np.array([p.flow.xb2 for p in data]),
    )


def _products(c: CostCoefficients, a: _Arrays) -> np.ndarray:
    """Condition products, one row per point in the order (f1, b1, f2, b2)."""
    cross = c.nu * a.xb1 * a.xb2
    gap1 = c.cf1 * a.xf1 - (c.cb * (c.lambda1 * a.xb1 + c.mu1 * a.xb2) + cross)
    gap2 = c.cf2 * a.xf2 - (c.cb * (c.lambda2 * a.xb2 + c.mu2 * a.xb1) + cross)
    return np.column_stack(
        (a.xf1 * gap1, a.xb1 * -gap1, a.xf2 * gap2, a.xb2 * -gap2)
    )


def count_violations(
    c: CostCoefficients, data: Sequence[DataPoint], epsilon: float = 1e-6
) -> ViolationCount:
    """Count equilibrium conditions violated by ``c`` over ``data``.

    A condition is violated when its product exceeds ``epsilon`` (the margin
    realizes the strict sign test in floating point; a product of exactly
    zero is always satisfied).  Returns the count together with per-condition
    flags and products.
    """
    if len(data) == 0:
        raise ValueError("data must be non-empty")
    for k, point in enumerate(data, start=1):
        try:
            check_feasible(point.demand, point.flow)
        except FeasibilityError as exc:
            raise FeasibilityError(f"data point k={k}: {exc}") from exc
    products = _products(c, _data_arrays(data))
    flag_matrix = products > epsilon
    flags = tuple(tuple(bool(v) for v in row) for row in flag_matrix)
    positive_sum = float(products[flag_matrix].sum()) if flag_matrix.any() else 0.0
    return ViolationCount(
        count=int(flag_matrix.sum()),
        flags=flags,
        products=products,
        positive_sum=positive_sum,
    )


def _resolve_bounds(opts: CalibrationOptions) -> dict[str, tuple[float, float]]:
    lower = dict(DEFAULT_LOWER_BOUNDS)
    upper = dict(DEFAULT_UPPER_BOUNDS)
    if opts.lower_bounds:
        lower.update(opts.lower_bounds)
    if opts.upper_bounds:
        upper.update(opts.upper_bounds)
    bounds: dict[str, tuple[float, float]] = {}
    for name in COEFFICIENT_NAMES:
        lb, ub = lower[name], upper[name]
        if lb > ub:
            raise ConfigurationError(f"lower bound {lb!r} exceeds upper bound {ub!r} for {name}")
        if name in FACTOR_NAMES and not (0 < lb and ub <= 1.0):
            raise ConfigurationError(
                f"{name} bounds must lie within (0, 1], got [{lb!r}, {ub!r}]"
            )
        if name in RATE_NAMES and not lb > 0:
            raise ConfigurationError(f"{name} lower bound must be > 0, got {lb!r}")
        bounds[name] = (lb, ub)
    return bounds


def _merge_bounds(
    bounds: dict[str, tuple[float, float]], names: Sequence[str]
) -> tuple[float, float]:
    lb = max(bounds[name][0] for name in names)
    ub = min(bounds[name][1] for name in names)
    if lb > ub:
        raise ConfigurationError(
            f"symmetry-merged bounds for {'/'.join(names)} are empty: [{lb!r}, {ub!r}]"
        )
    return lb, ub


@dataclass(frozen=True)
class _VariableSpace:
    """Linearized continuous variables, their box, and the coupling rows
    tying each rate-times-factor product to its rate variable."""

    symmetry: bool
    names: tuple[str, ...]
    box: tuple[tuple[float, float], ...]
    coupling_matrix: np.ndarray
    coupling_rhs: np.ndarray
    coupling_labels: tuple[str, ...]
    factor_bounds: dict[str, tuple[float, float]]
    rate_bounds: dict[str, tuple[float, float]]


def _variable_space(opts: CalibrationOptions) -> _VariableSpace:
    bounds = _resolve_bounds(opts)
    rows: list[tuple[dict[str, float], float, str]] = []
    if opts.symmetry:
        cf = _merge_bounds(bounds, ("cf1", "cf2", "cb"))
        lam = _merge_bounds(bounds, ("lambda1", "lambda2"))
        mu = _merge_bounds(bounds, ("mu1", "mu2"))
        nu = bounds["nu"]
        names = ("cf", "cb_lambda", "cb_mu", "nu")
        box = (
            cf,
            (lam[0] * cf[0], lam[1] * cf[1]),
            (mu[0] * cf[0], mu[1] * cf[1]),
            nu,
        )
        factor_bounds = {"cb_lambda": lam, "cb_mu": mu}
        rate_bounds = {"cf": cf, "nu": nu}
        for product, (lb, ub) in factor_bounds.items():
            rows.append(({product: 1.0, "cf": -ub}, 0.0, f"{product} <= {ub} * cf"))
            rows.append(({product: -1.0, "cf": lb}, 0.0, f"{product} >= {lb} * cf"))
    else:
        names = ("cf1", "cf2", "cb", "cb_lambda1", "cb_lambda2", "cb_mu1", "cb_mu2", "nu")
        factor_bounds = {
            "cb_lambda1": bounds["lambda1"],
            "cb_lambda2": bounds["lambda2"],
            "cb_mu1": bounds["mu1"],
            "cb_mu2": bounds["mu2"],
        }
        rate_bounds = {name: bounds[name] for name in ("cf1", "cf2", "cb", "nu")}
        cb = bounds["cb"]
        box = (
            bounds["cf1"],
            bounds["cf2"],
            cb,
            *(
                (factor_bounds[name][0] * cb[0], factor_bounds[name][1] * cb[1])
                for name in ("cb_lambda1", "cb_lambda2", "cb_mu1", "cb_mu2")
            ),
            bounds["nu"],
        )
        for product, (lb, ub) in factor_bounds.items():
            rows.append(({product: 1.0, "cb": -ub}, 0.0, f"{product} <= {ub} * cb"))
            rows.append(({product: -1.0, "cb": lb}, 0.0, f"{product} >= {lb} * cb"))
    index = {name: i for i, name in enumerate(names)}
    matrix = np.zeros((len(rows), len(names)))
    rhs = np.zeros(len(rows))
    labels = []
    for r, (coeffs, b, label) in enumerate(rows):
        for name, value in coeffs.items():
            matrix[r, index[name]] = value
        rhs[r] = b
        labels.append(label)
    return _VariableSpace(
        symmetry=opts.symmetry,
        names=names,
        box=box,
        coupling_matrix=matrix,
        coupling_rhs=rhs,
        coupling_labels=tuple(labels),
        factor_bounds=factor_bounds,
        rate_bounds=rate_bounds,
    )


def linearized_values(c: CostCoefficients, symmetry: bool) -> dict[str, float]:
    """Map a coefficient vector into the linearized variable space."""
    if symmetry:
        return {
            "cf": c.cf1,
            "cb_lambda": c.cb * c.lambda1,
            "cb_mu": c.cb * c.mu1,
            "nu": c.nu,
        }
    return {
        "cf1": c.cf1,
        "cf2": c.cf2,
        "cb": c.cb,
        "cb_lambda1": c.cb * c.lambda1,
        "cb_lambda2": c.cb * c.lambda2,
        "cb_mu1": c.cb * c.mu1,
        "cb_mu2": c.cb * c.mu2,
        "nu": c.nu,
    }


def _condition_matrix(arrays: _Arrays, space: _VariableSpace) -> np.ndarray:
    """Affine condition coefficients: row (4k + j) gives condition j of
    point k as a dot product with the linearized variables."""
    K = arrays.xf1.shape[0]
    n = len(space.names)
    index = {name: i for i, name in enumerate(space.names)}
    rows = np.zeros((4 * K, n))
    cross = arrays.xb1 * arrays.xb2
    for k in range(K):
        xf1, xb1, xf2, xb2 = arrays.xf1[k], arrays.xb1[k], arrays.xf2[k], arrays.xb2[k]
        gap1 = np.zeros(n)
        gap2 = np.zeros(n)
        if space.symmetry:
            gap1[index["cf"]] = xf1
            gap1[index["cb_lambda"]] = -xb1
            gap1[index["cb_mu"]] = -xb2
            gap2[index["cf"]] = xf2
            gap2[index["cb_lambda"]] = -xb2
            gap2[index["cb_mu"]] = -xb1
        else:
            gap1[index["cf1"]] = xf1
            gap1[index["cb_lambda1"]] = -xb1
            gap1[index["cb_mu1"]] = -xb2
            gap2[index["cf2"]] = xf2
            gap2[index["cb_lambda2"]] = -xb2
            gap2[index["cb_mu2"]] = -xb1
        gap1[index["nu"]] = -cross[k]
        gap2[index["nu"]] = -cross[k]
        rows[4 * k + 0] = xf1 * gap1
        rows[4 * k + 1] = -xb1 * gap1
        rows[4 * k + 2] = xf2 * gap2
        rows[4 * k + 3] = -xb2 * gap2
    return rows


def _recover_coefficients(z: np.ndarray, space: _VariableSpace) -> CostCoefficients:
    def clip(value: float, lohi: tuple[float, float]) -> float:
        return min(max(value, lohi[0]), lohi[1])

    if space.symmetry:
        cf = clip(float(z[0]), space.rate_bounds["cf"])
        lam = clip(float(z[1]) / cf, space.factor_bounds["cb_lambda"])
        mu = clip(float(z[2]) / cf, space.factor_bounds["cb_mu"])
        nu = clip(float(z[3]), space.rate_bounds["nu"])
        return CostCoefficients(cf, cf, cf, lam, lam, mu, mu, nu)
    cf1 = clip(float(z[0]), space.rate_bounds["cf1"])
    cf2 = clip(float(z[1]), space.rate_bounds["cf2"])
    cb = clip(float(z[2]), space.rate_bounds["cb"])
    lam1 = clip(float(z[3]) / cb, space.factor_bounds["cb_lambda1"])
    lam2 = clip(float(z[4]) / cb, space.factor_bounds["cb_lambda2"])
    mu1 = clip(float(z[5]) / cb, space.factor_bounds["cb_mu1"])
    mu2 = clip(float(z[6]) / cb, space.factor_bounds["cb_mu2"])
    nu = clip(float(z[7]), space.rate_bounds["nu"])
    return CostCoefficients(cf1, cf2, cb, lam1, lam2, mu1, mu2, nu)


# ---------------------------------------------------------------------------
# Indicator / big-M system description


@dataclass(frozen=True)
class LinearRow:
    """One inequality ``sum(coeffs[v] * v) <= rhs`` over continuous and
    binary variables."""

    coeffs: dict[str, float]
    rhs: float
    label: str


@dataclass(frozen=True)
class MilpSystem:
    """Self-contained description of the calibration feasibility program:
    minimize the sum of the binaries subject to ``rows`` and ``bound_rows``."""

    continuous: tuple[str, ...]
    binaries: tuple[str, ...]
    rows: tuple[LinearRow, ...]
    bound_rows: tuple[LinearRow, ...]

    @property
    def objective(self) -> tuple[str, ...]:
        return self.binaries


def build_milp(data: Sequence[DataPoint], opts: CalibrationOptions) -> MilpSystem:
    """Emit the indicator/big-M inequality system for ``data``.

    Each (point, condition) pair contributes one binary ``e`` and two rows:
    ``P <= T*e - eps`` and ``-P <= T*(1 - e) - eps``, where ``P`` is the
    condition product written as an affine form in the linearized
    coefficient variables.  Box and factor-coupling constraints are emitted
    separately as ``bound_rows``.
    """
    space = _variable_space(opts)
    arrays = _data_arrays(data)
    matrix = _condition_matrix(arrays, space)
    T = opts.big_m
    eps = opts.epsilon
    rows: list[LinearRow] = []
    binaries: list[str] = []
    for k in range(len(data)):
        for j, cond in enumerate(CONDITION_NAMES):
            e_name = f"e_{cond}[{k + 1}]"
            binaries.append(e_name)
            a = matrix[4 * k + j]
            forward = {name: float(v) for name, v in zip(space.names, a) if v != 0.0}
            backward = {name: -float(v) for name, v in zip(space.names, a) if v != 0.0}
            rows.append(
                LinearRow({**forward, e_name: -T}, -eps, f"k={k + 1} {cond}: P <= T*e - eps")
            )
            rows.append(
                LinearRow(
                    {**backward, e_name: T}, T - eps, f"k={k + 1} {cond}: -P <= T*(1-e) - eps"
                )
            )
    bound_rows: list[LinearRow] = []
    for coeffs_row, rhs, label in zip(
        space.coupling_matrix, space.coupling_rhs, space.coupling_labels
    ):
        coeffs = {
            name: float(v) for name, v in zip(space.names, coeffs_row) if v != 0.0
        }
        bound_rows.append(LinearRow(coeffs, float(rhs), label))
    for name, (lb, ub) in zip(space.names, space.box):
        bound_rows.append(LinearRow({name: -1.0}, -lb, f"{name} >= {lb}"))
        bound_rows.append(LinearRow({name: 1.0}, ub, f"{name} <= {ub}"))
    return MilpSystem(
        continuous=space.names,
        binaries=tuple(binaries),
        rows=tuple(rows),
        bound_rows=tuple(bound_rows),
    )


# ---------------------------------------------------------------------------
# Exact solver: branch and bound over indicator assignments


def _feasible_point(
    condition_rows: np.ndarray, space: _VariableSpace
) -> np.ndarray | None:
    """Any point of the coefficient box satisfying the given condition rows
    (each ``row . z <= 0``) and the factor-coupling constraints."""
    if condition_rows.shape[0]:
        A_ub = np.vstack((condition_rows, space.coupling_matrix))
        b_ub = np.concatenate((np.zeros(condition_rows.shape[0]), space.coupling_rhs))
    else:
        A_ub = space.coupling_matrix
        b_ub = space.coupling_rhs
    result = linprog(
        c=np.zeros(len(space.names)),
        A_ub=A_ub,
        b_ub=b_ub,
        bounds=list(space.box),
        method="highs",
        options=_LP_OPTIONS,
    )
    if result.status != 0 or result.x is None:
        return None
    return np.asarray(result.x, dtype=float)


def calibrate_exact(data: Sequence[DataPoint], opts: CalibrationOptions) -> CalibrationResult:
    """Minimize the violation count exactly by branch and bound.

    Nodes fix a subset of conditions as satisfied (product <= 0, the
    equilibrium inequality itself) or as counted violations; a linear
    feasibility subproblem over the bounded, linearized coefficient box
    decides each node.  Refuses instances with more than
    ``opts.max_exact_binaries`` conditions; use :func:`calibrate_search`
    (or raise the guard) beyond that.
    """
    K = len(data)
    if K == 0:
        raise ValueError("data must be non-empty")
    n_conditions = 4 * K
    if n_conditions > opts.max_exact_binaries:
        raise ExactSolverGuardError(
            f"instance has {n_conditions} indicator variables, above the exact-solver "
            f"guard of {opts.max_exact_binaries}; use solver='heuristic' "
            f"(calibrate_search) or raise max_exact_binaries"
        )
    space = _variable_space(opts)
    arrays = _data_arrays(data)
    matrix = _condition_matrix(arrays, space)
    close_tol = min(opts.epsilon, 1e-8)

    best_count: int = n_conditions + 1
    best_coeffs: CostCoefficients | None = None
    best_report: ViolationCount | None = None

    def consider(candidate: CostCoefficients) -> None:
        nonlocal best_count, best_coeffs, best_report
        report = count_violations(candidate, data, opts.epsilon)
        key = (report.count, candidate.as_tuple())
        if best_coeffs is None or key < (best_count, best_coeffs.as_tuple()):
            best_count = report.count
            best_coeffs = candidate
            best_report = report

    # Stack of (satisfied, violated, free) index tuples; satisfied branches
    # are pushed last so they are explored first.
    stack: list[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]] = [
        ((), (), tuple(range(n_conditions)))
    ]
    while stack:
        satisfied, violated, free = stack.pop()
        if len(violated) >= best_count:
            continue
        # Optimistic check: can everything not yet counted be satisfied?
        witness = _feasible_point(matrix[list(satisfied) + list(free)], space)
        if witness is not None:
            consider(_recover_coefficients(witness, space))
            continue
        if free == ():
            continue
        witness = _feasible_point(matrix[list(satisfied)], space)
        if witness is None:
            continue
        products = matrix[list(free)] @ witness
        worst = int(np.argmax(products))
        if products[worst] <= close_tol:
            consider(_recover_coefficients(witness, space))
            continue
        chosen = free[worst]
        remaining = free[:worst] + free[worst + 1 :]
        stack.append((satisfied, violated + (chosen,), remaining))
        stack.append((satisfied + (chosen,), violated, remaining))

    if best_coeffs is None or best_report is None:
        raise ConfigurationError(
            "no admissible coefficient vector exists for the given bounds"
        )
    return CalibrationResult(
        coefficients=best_coeffs,
        violations=best_report.count,
        indicator_assignment=best_report.flags,
        certificate="exact",
        uniqueness=check_uniqueness_condition(best_coeffs),
    )


# ---------------------------------------------------------------------------
# Heuristic solver: multi-start randomized search with coordinate refinement


def _search_space(opts: CalibrationOptions) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    bounds = _resolve_bounds(opts)
    if opts.symmetry:
        cf = _merge_bounds(bounds, ("cf1", "cf2", "cb"))
        lam = _merge_bounds(bounds, ("lambda1", "lambda2"))
        mu = _merge_bounds(bounds, ("mu1", "mu2"))
        names = ("cf", "lambda", "mu", "nu")
        lohi = (cf, lam, mu, bounds["nu"])
    else:
        names = COEFFICIENT_NAMES
        lohi = tuple(bounds[name] for name in names)
    lo = np.array([b[0] for b in lohi])
    hi = np.array([b[1] for b in lohi])
    return names, lo, hi


def _theta_to_coefficients(theta: np.ndarray, symmetry: bool) -> CostCoefficients:
    if symmetry:
        cf, lam, mu, nu = (float(v) for v in theta)
        return CostCoefficients(cf, cf, cf, lam, lam, mu, mu, nu)
    return CostCoefficients(*(float(v) for v in theta))


def _objective(
    theta: np.ndarray, arrays: _Arrays, symmetry: bool, epsilon: float
) -> tuple[int, float, float]:
    """Lexicographic search objective.

    Primary: violation count.  Secondary: summed positive parts of the
    violated products.  Tertiary: deficit of the uniqueness condition, so
    that among otherwise equivalent fits the solver prefers one whose
    equilibrium predictions are certified unique.
    """
    c = _theta_to_coefficients(theta, symmetry)
    products = _products(c, arrays)
    flagged = products > epsilon
    count = int(flagged.sum())
    positive = float(products[flagged].sum()) if count else 0.0
    margins = uniqueness_margins(c)
    deficit = max(0.0, -min(margins))
    return (count, positive, deficit)


def _least_squares_start(
    arrays: _Arrays, space: _VariableSpace
) -> np.ndarray | None:
    """Deterministic start: fit the interior cost-equality rows in the
    linearized space and rescale onto the admissible box (the equilibrium
    conditions are scale-invariant, so only the ray direction matters)."""
    tiny = 1e-9
    rows = []
    for k in range(arrays.xf1.shape[0]):
        xf1, xb1 = arrays.xf1[k], arrays.xb1[k]
        xf2, xb2 = arrays.xf2[k], arrays.xb2[k]
        cross = xb1 * xb2
        if xf1 > tiny and xb1 > tiny:
            if space.symmetry:
                rows.append((xf1, -xb1, -xb2, -cross))
            else:
                rows.append((xf1, 0.0, 0.0, -xb1, 0.0, -xb2, 0.0, -cross))
        if xf2 > tiny and xb2 > tiny:
            if space.symmetry:
                rows.append((xf2, -xb2, -xb1, -cross))
            else:
                rows.append((0.0, xf2, 0.0, 0.0, -xb2, 0.0, -xb1, -cross))
    if not rows:
        return None
    matrix = np.array(rows)
    if not space.symmetry:
        # cb never appears alone in a gap row (only through the products),
        # so drop its column and anchor it at the mean feed rate afterwards.
        matrix = matrix[:, [0, 1, 3, 4, 5, 6, 7]]
    # Ridge-anchored least squares: the nearest near-null direction to an
    # all-ones anchor, which keeps underdetermined fits positive.
    d = matrix.shape[1]
    delta = 1e-6 * max(1.0, float(np.linalg.norm(matrix)))
    augmented = np.vstack((matrix, delta * np.eye(d)))
    target = np.concatenate((np.zeros(matrix.shape[0]), delta * np.ones(d)))
    v, *_ = np.linalg.lstsq(augmented, target, rcond=None)
    if v[0] < 0:
        v = -v
    if space.symmetry:
        cf, g, h, nu = (float(x) for x in v)
        if cf <= tiny or nu <= tiny:
            return None
        cf_b, nu_b = space.rate_bounds["cf"], space.rate_bounds["nu"]
        scale = max(cf_b[0] / cf, nu_b[0] / nu)
        if cf * scale > cf_b[1] or nu * scale > nu_b[1]:
            return None
        cf, g, h, nu = cf * scale, g * scale, h * scale, nu * scale
        lam_b = space.factor_bounds["cb_lambda"]
        mu_b = space.factor_bounds["cb_mu"]
        lam = min(max(g / cf, lam_b[0]), lam_b[1])
        mu = min(max(h / cf, mu_b[0]), mu_b[1])
        return np.array([cf, lam, mu, nu])
    cf1, cf2, g1, g2, h1, h2, nu = (float(x) for x in v)
    if cf1 <= tiny or cf2 <= tiny or nu <= tiny:
        return None
    cb = 0.5 * (cf1 + cf2)
    rb = space.rate_bounds
    scale = max(rb["cf1"][0] / cf1, rb["cf2"][0] / cf2, rb["nu"][0] / nu, rb["cb"][0] / cb)
    values = np.array([cf1, cf2, cb, g1, g2, h1, h2, nu]) * scale
    if (
        values[0] > rb["cf1"][1]
        or values[1] > rb["cf2"][1]
        or values[2] > rb["cb"][1]
        or values[7] > rb["nu"][1]
    ):
        return None
    fb = space.factor_bounds
    lam1 = min(max(values[3] / values[2], fb["cb_lambda1"][0]), fb["cb_lambda1"][1])
    lam2 = min(max(values[4] / values[2], fb["cb_lambda2"][0]), fb["cb_lambda2"][1])
    mu1 = min(max(values[5] / values[2], fb["cb_mu1"][0]), fb["cb_mu1"][1])
    mu2 = min(max(values[6] / values[2], fb["cb_mu2"][0]), fb["cb_mu2"][1])
    return np.array([values[0], values[1], values[2], lam1, lam2, mu1, mu2, values[7]])


# The schedule reaches well below the counting margin's width in
# coefficient space (products move by roughly step * share per step), so a
# walk can actually land inside a zero-violation band instead of straddling it.
_STEP_FRACTIONS = (
    0.25, 0.08, 0.025, 0.008, 0.0025,
    8e-4, 2.5e-4, 8e-5, 2.5e-5, 8e-6, 2.5e-6, 8e-7,
)


def _refine(
    theta: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    arrays: _Arrays,
    symmetry: bool,
    epsilon: float,
) -> tuple[tuple[int, float, float], np.ndarray]:
    """Coordinate pattern search from ``theta`` with a shrinking step."""
    theta = theta.copy()
    value = _objective(theta, arrays, symmetry, epsilon)
    span = hi - lo
    for fraction in _STEP_FRACTIONS:
        for _ in range(40):
            improved = False
            for dim in range(theta.shape[0]):
                step = fraction * span[dim]
                for direction in (1.0, -1.0):
                    while True:
                        trial = theta.copy()
                        trial[dim] = min(max(trial[dim] + direction * step, lo[dim]), hi[dim])
                        if trial[dim] == theta[dim]:
                            break
                        trial_value = _objective(trial, arrays, symmetry, epsilon)
                        if trial_value < value:
                            theta, value = trial, trial_value
                            improved = True
                        else:
                            break
            if not improved:
                break
    return value, theta


def calibrate_search(
    data: Sequence[DataPoint], opts: CalibrationOptions
) -> CalibrationResult:
    """Heuristic violation-count minimization over the bounded box.

    Runs ``opts.restarts`` starts (one deterministic least-squares seed plus
    random box samples) through a coordinate pattern search, returning the
    lexicographically best outcome; deterministic for a fixed seed and never
    worse than the best raw start point.
    """
    K = len(data)
    if K == 0:
        raise ValueError("data must be non-empty")
    space = _variable_space(opts)
    arrays = _data_arrays(data)
    names, lo, hi = _search_space(opts)
    rng = np.random.default_rng(opts.seed)

    starts: list[np.ndarray] = []
    seed_theta = None
    ls = _least_squares_start(arrays, space)
    if ls is not None:
        seed_theta = np.minimum(np.maximum(ls, lo), hi)
        starts.append(seed_theta)
    else:
        starts.append(0.5 * (lo + hi))
    for _ in range(opts.restarts - 1):
        starts.append(lo + rng.random(lo.shape[0]) * (hi - lo))

    best_value: tuple[int, float, float] | None = None
    best_theta: np.ndarray | None = None
    for start in starts:
        value, theta = _refine(start, lo, hi, arrays, opts.symmetry, opts.epsilon)
        candidate = _theta_to_coefficients(theta, opts.symmetry)
        key = (value, candidate.as_tuple())
        if best_value is None or key < (
            best_value,
            _theta_to_coefficients(best_theta, opts.symmetry).as_tuple(),
        ):
            best_value, best_theta = value, theta
        if best_value == (0, 0.0, 0.0):
            break

    assert best_theta is not None
    coefficients = _theta_to_coefficients(best_theta, opts.symmetry)
    report = count_violations(coefficients, data, opts.epsilon)
    return CalibrationResult(
        coefficients=coefficients,
        violations=report.count,
        indicator_assignment=report.flags,
        certificate="heuristic",
        uniqueness=check_uniqueness_condition(coefficients),
    )
