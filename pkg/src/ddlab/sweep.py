"""
Risk curves over inverse regularization strength (or iterations), descent
detection, and the per-feature minima experiments.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .early_stop import early_stopping_risk
from .model_core import make_rng, population_risk, sample_dataset
from .ridge import SingularSystemError, align_lambdas, analytic_risk, optimal_lambdas, ridge_fit

DEFAULT_TOLERANCE = 0.005


@dataclass(frozen=True)
class RiskCurve:
    """A risk curve on an increasing axis.

    components has one row per named component and one column per grid point.
    For linear curves, noise floor plus the column sum of components equals total.
    """

    axis: np.ndarray
    total: np.ndarray
    components: np.ndarray
    component_names: tuple
    axis_name: str = "inv_lambda"
    noise_floor: float = 0.0
    valid: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        total = np.asarray(self.total, dtype=float)
        comps = np.asarray(self.components, dtype=float).reshape(-1, axis.size)
        if axis.ndim != 1 or axis.size == 0:
            raise ValueError("axis must be a non-empty vector")
        if np.any(np.diff(axis) <= 0) or np.any(axis < 0):
            raise ValueError("axis must be non-negative and strictly increasing")
        if total.shape != axis.shape:
            raise ValueError("total must match the axis length")
        if comps.shape[0] != len(self.component_names):
            raise ValueError("one component name per component row is required")
        valid = np.isfinite(total) if self.valid is None else np.asarray(self.valid, dtype=bool)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "total", total)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "component_names", tuple(self.component_names))
        object.__setattr__(self, "valid", valid)

    def __len__(self):
        return self.axis.size

    def grid_min(self):
        """(index, value) of the smallest valid total."""
        vals = np.where(self.valid, self.total, np.inf)
        i = int(np.argmin(vals))
        return i, float(vals[i])


@dataclass(frozen=True)
class DescentReport:
    interior_minima: list
    interior_maxima: list
    descent_count: int
    tolerance: float


def inverse_lambda_grid(lo=1e-2, hi=1e4, points_per_decade=100):
    """Log-spaced grid whose exponents are multiples of 1 / points_per_decade."""
    a = int(np.round(np.log10(lo) * points_per_decade))
    b = int(np.round(np.log10(hi) * points_per_decade))
    if b <= a:
        raise ValueError("grid upper bound must exceed the lower bound")
    return 10.0 ** (np.arange(a, b + 1) / points_per_decade)


def _feature_names(d):
    names = []
    for i in range(1, d + 1):
        names += [f"V_{i}_bias", f"V_{i}_var"]
    return names


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
        raise ValueError("grid must hold positive inverse-lambda values")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid


def policy_lambdas(model, n, inv_lambda, policy="uniform", anchor=0):
    """Per-feature penalties at one grid point of a sweep policy."""
    lam = 1.0 / inv_lambda
    if policy == "uniform":
        return np.full(model.d, lam)
    if policy == "aligned":
        return align_lambdas(model, anchor, lam)
    if policy == "optimal":
        return optimal_lambdas(model, n)
    raise ValueError(f"unknown policy {policy!r}")


def sweep_lambda_analytic(model, n, grid, policy="uniform", anchor=0):
    """Analytic risk along a grid of 1/lambda values.

    For policy "aligned" the grid value is the inverse of the anchor
    feature's penalty; "optimal" evaluates the fixed optimal penalties at
    every point.
    """
    grid = _check_grid(grid)
    total = np.empty(grid.size)
    comps = np.empty((2 * model.d, grid.size))
    for k, g in enumerate(grid):
        dec = analytic_risk(model, n, policy_lambdas(model, n, g, policy, anchor))
        total[k] = dec.total
        comps[0::2, k] = dec.bias_terms
        comps[1::2, k] = dec.variance_terms
    meta = dict(kind="analytic", policy=policy, anchor=anchor, n=n)
    return RiskCurve(grid, total, comps, _feature_names(model.d), "inv_lambda",
                     model.noise_std ** 2, metadata=meta)


def _empirical_point(args):
    model, n, inv_lam, reps, base_seed, index = args
    lam = 1.0 / inv_lam
    terms = np.zeros(model.d)
    for r in range(reps):
        seed = int(make_rng(base_seed, index, r).integers(0, 2**63))
        data = sample_dataset(model, n, seed)
        try:
            theta = ridge_fit(data, lam).theta_hat
        except SingularSystemError:
            return None
        terms += model.feature_vars * (model.theta_star - theta) ** 2
    return terms / reps


def run_ordered(func, tasks, workers=1):
    """Map `func` over `tasks`, preserving order; results do not depend on `workers`."""
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def sweep_lambda_empirical(model, n, grid, datasets_per_point, base_seed, workers=1):
    """Mean exact risk of uniform ridge over fresh datasets at each grid point.

    Dataset seeds depend only on (base_seed, point index, replicate index).
    Points where the solver fails are marked invalid and hold NaN.
    """
    grid = _check_grid(grid)
    reps = int(datasets_per_point)
    if reps < 1:
        raise ValueError("datasets_per_point must be at least 1")
    tasks = [(model, n, g, reps, base_seed, k) for k, g in enumerate(grid)]
    results = run_ordered(_empirical_point, tasks, workers)
    comps = np.full((model.d, grid.size), np.nan)
    valid = np.zeros(grid.size, dtype=bool)
    for k, res in enumerate(results):
        if res is not None:
            comps[:, k] = res
            valid[k] = True
    floor = model.noise_std ** 2
    total = floor + comps.sum(axis=0)
    names = [f"feature_{i}" for i in range(1, model.d + 1)]
    meta = dict(kind="empirical", n=n, datasets_per_point=reps, base_seed=base_seed)
    return RiskCurve(grid, total, comps, names, "inv_lambda", floor, valid, meta)


def sweep_epoch(model, n, stepsizes, t_grid):
    """Early-stopping risk along an increasing grid of iteration counts."""
    t_grid = np.asarray(t_grid)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0) or np.any(t_grid < 0):
        raise ValueError("t_grid must be non-negative and strictly increasing")
    total = np.empty(t_grid.size)
    comps = np.empty((2 * model.d, t_grid.size))
    for k, t in enumerate(t_grid):
        dec = early_stopping_risk(model, n, stepsizes, int(t))
        total[k] = dec.total
        comps[0::2, k] = dec.bias_terms
        comps[1::2, k] = dec.variance_terms
    meta = dict(kind="early-stopping", n=n)
    return RiskCurve(t_grid.astype(float), total, comps, _feature_names(model.d), "t",
                     model.noise_std ** 2, metadata=meta)


def detect_descents(curve, tolerance=DEFAULT_TOLERANCE):
    """Count descents of a curve, ignoring wiggles shallower than
    tolerance * (max - min).

    Accepts a RiskCurve (invalid points are skipped) or a plain sequence.
    Returned indices refer to positions in the original curve.
    """
    if isinstance(curve, RiskCurve):
        idx = np.flatnonzero(curve.valid)
        values = curve.total[idx]
    else:
        values = np.asarray(curve, dtype=float)
        idx = np.arange(values.size)
    if values.size < 3:
        raise ValueError("need at least 3 valid points")
    spread = float(values.max() - values.min())
    if spread == 0:
        return DescentReport([], [], 0, tolerance)
    h = tolerance * spread

    minima, maxima = [], []
    lo = hi = values[0]
    lo_at = hi_at = 0
    state = 0  # +1 rising, -1 falling, 0 undecided
    for i, v in enumerate(values):
        if v > hi:
            hi, hi_at = v, i
        if v < lo:
            lo, lo_at = v, i
        if state >= 0 and v < hi - h:
            if state == 1:
                maxima.append(hi_at)
            state = -1
            lo, lo_at = v, i
        elif state <= 0 and v > lo + h:
            if state == -1:
                minima.append(lo_at)
            state = 1
            hi, hi_at = v, i
    turns = [0] + sorted(minima + maxima) + [values.size - 1]
    descents = sum(1 for a, b in zip(turns, turns[1:]) if values[b] < values[a] - h)
    last = values.size - 1
    report_min = [(int(idx[i]), float(values[i])) for i in minima if 0 < i < last]
    report_max = [(int(idx[i]), float(values[i])) for i in maxima if 0 < i < last]
    return DescentReport(report_min, report_max, descents, tolerance)


@dataclass(frozen=True)
class MinimumLocation:
    feature: int
    grid_lambda: float
    closed_form: float
    step_ratio: float  # multiplicative grid spacing

    @property
    def steps_off(self):
        return abs(np.log(self.grid_lambda / self.closed_form)) / np.log(self.step_ratio)


def feature_tradeoff(model, n, feature, lambdas):
    """V_i(lambda) for a single feature over an array of penalties."""
    s2 = model.feature_vars[feature]
    th2 = model.theta_star[feature] ** 2
    q = model.noise_std ** 2 / n
    lam = np.asarray(lambdas, dtype=float)
    return s2 * (th2 * lam ** 2 + q * s2) / (s2 + lam) ** 2


def minima_locations(model, n, points_per_decade=100, span_decades=3):
    """Grid argmin of every per-feature tradeoff next to its closed form."""
    closed = optimal_lambdas(model, n)
    out = []
    for i, lam_star in enumerate(closed):
        center = np.log10(lam_star)
        grid = inverse_lambda_grid(10 ** (center - span_decades),
                                   10 ** (center + span_decades), points_per_decade)
        vals = feature_tradeoff(model, n, i, grid)
        out.append(MinimumLocation(i, float(grid[np.argmin(vals)]), float(lam_star),
                                   10 ** (1 / points_per_decade)))
    return out


def figure2_curves(model, n, grid, anchor=0):
    """Uniform and aligned analytic curves of a model, plus their descent reports."""
    uniform = sweep_lambda_analytic(model, n, grid, "uniform")
    aligned = sweep_lambda_analytic(model, n, grid, "aligned", anchor)
    return dict(
        uniform=uniform,
        aligned=aligned,
        uniform_report=detect_descents(uniform),
        aligned_report=detect_descents(aligned),
    )
