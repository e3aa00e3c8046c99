"""
Batch verification suites for the exact identities and bounds.

Every suite returns a `SuiteResult` holding one row per checked case (a dict
with at least "case", "measured", "threshold" and "passed") and the overall
verdict.
"""

from dataclasses import dataclass

import numpy as np

from .early_stop import early_stopping_risk, gd_fit, lambda_equivalent
from .model_core import Dataset, GaussianLinearModel, make_rng, population_risk, sample_dataset
from .ntk import complement_drift_prediction, decompose, drift_split, signal_drift_prediction
from .ridge import BoundConfig, analytic_risk, ridge_fit, theorem1_bound
from .two_layer import TwoLayerNet, loss_and_grad


@dataclass
class SuiteResult:
    name: str
    rows: list
    passed: bool

    def first_failure(self):
        return next((r for r in self.rows if not r["passed"]), None)


def _rel(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(b), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b) / scale))


def prop2_suite(configs=100, steps=(1, 10, 100), seed=0, rtol=1e-12):
    """Early-stopping risk vs ridge risk at the equivalent penalties, term by term."""
    rows = []
    for c in range(configs):
        rng = make_rng(seed, c)
        d = int(rng.integers(1, 9))
        stds = rng.uniform(0.1, 3.0, d)
        eta = rng.uniform(0.05, 0.95, d) / stds ** 2
        model = GaussianLinearModel(rng.standard_normal(d) * 2, stds, rng.uniform(0.1, 3.0))
        n = int(rng.integers(1, 2000))
        for t in steps:
            es = early_stopping_risk(model, n, eta, t)
            rr = analytic_risk(model, n, lambda_equivalent(stds, eta, t))
            err = max(_rel(rr.bias_terms, es.bias_terms), _rel(rr.variance_terms, es.variance_terms))
            rows.append(dict(case=f"config{c}_t{t}", d=d, n=n, t=t, measured=err,
                             threshold=rtol, passed=err <= rtol))
    return SuiteResult("prop2", rows, all(r["passed"] for r in rows))


def random_bound_model(d=20, seed=0, noise_std=1.0):
    """Model with feature_stds ~ U[0.2, 2] and theta* ~ N(0, I)."""
    rng = make_rng(seed, 0xB0)
    return GaussianLinearModel(rng.standard_normal(d), rng.uniform(0.2, 2.0, d), noise_std)


def approximation_gaps(model, n, lambdas, datasets, seed):
    """|population risk of ridge - analytic risk|, shape (datasets, len(lambdas))."""
    out = np.empty((datasets, len(lambdas)))
    ana = np.array([analytic_risk(model, n, lam).total for lam in lambdas])
    for r in range(datasets):
        data = sample_dataset(model, n, int(make_rng(seed, n, r).integers(0, 2**63)))
        for j, lam in enumerate(lambdas):
            out[r, j] = population_risk(model, ridge_fit(data, lam).theta_hat)
        out[r] = np.abs(out[r] - ana)
    return out


def theorem1_suite(ns=(500, 1000, 2000, 4000), datasets=200, lambdas=None, seed=0,
                   slope_max=-0.5):
    """Scaling of the ridge approximation gap against the bound.

    The statistic per n is the median over datasets of the largest gap over the
    lambda grid.  It must decrease in n with log-log slope <= slope_max, and
    after fixing c so that c * max_lambda bound equals the statistic at the
    first n, the bound must stay above the statistic at every later n.
    """
    lambdas = np.logspace(-4, 3, 36) if lambdas is None else np.asarray(lambdas, dtype=float)
    model = random_bound_model(seed=seed)
    stats, bounds = [], []
    for n in ns:
        gaps = approximation_gaps(model, n, lambdas, datasets, seed)
        stats.append(float(np.median(gaps.max(axis=1))))
        bounds.append(max(theorem1_bound(model, n, lam) for lam in lambdas))
    stats = np.array(stats)
    bounds = np.array(bounds)
    c = stats[0] / bounds[0]
    cfg = BoundConfig(c)
    slope = float(np.polyfit(np.log(ns), np.log(stats), 1)[0])
    rows = []
    for i, n in enumerate(ns):
        bound = max(theorem1_bound(model, n, lam, cfg) for lam in lambdas)
        ok = bool(stats[i] <= bound * (1 + 1e-12))
        rows.append(dict(case=f"majorize_n{n}", n=n, measured=stats[i], threshold=bound, passed=ok))
    for i in range(1, len(ns)):
        rows.append(dict(case=f"decrease_n{ns[i]}", n=ns[i], measured=stats[i],
                         threshold=stats[i - 1], passed=bool(stats[i] < stats[i - 1])))
    rows.append(dict(case="loglog_slope", n=0, measured=slope, threshold=slope_max,
                     passed=slope <= slope_max))
    return SuiteResult("theorem1", rows, all(r["passed"] for r in rows))


def ntk_suite(settings=((0.01, 0.1), (0.01, 1.0)), steps=(1, 10, 100), p=64, n=8, seed=0,
              rtol=1e-8):
    """Drift predictions vs gradient descent on a fixed linear system f = J theta."""
    rng = make_rng(seed, 0x47)
    J = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    theta0 = rng.standard_normal(p)
    dec = decompose(J)
    rows = []
    for eta, lam in settings:
        traj = gd_fit(Dataset(J, y), eta, lam, max(steps), init=theta0)
        for t in steps:
            signal, comp = drift_split(dec, traj.iterates[t], theta0)
            es = _rel(signal, signal_drift_prediction(dec, theta0, y, eta, lam, t))
            ec = _rel(comp, complement_drift_prediction(dec, theta0, eta, lam, t))
            for part, err in (("signal", es), ("complement", ec)):
                rows.append(dict(case=f"{part}_eta{eta}_lam{lam}_t{t}", measured=err,
                                 threshold=rtol, passed=err <= rtol))
    return SuiteResult("ntk", rows, all(r["passed"] for r in rows))


def _margin_safe(rng, d, k, m, margin):
    while True:
        net = TwoLayerNet(rng.standard_normal((k, d)) * np.sqrt(2.0 / d),
                          rng.standard_normal(k) * np.sqrt(2.0 / k))
        X = rng.standard_normal((m, d))
        if np.min(np.abs(X @ net.w1.T)) >= margin:
            return net, X


def gradcheck_suite(pairs=50, h=1e-6, margin=1e-3, seed=0, rtol=1e-5):
    """Analytic vs central-difference gradients of the penalized loss."""
    rows = []
    for c in range(pairs):
        rng = make_rng(seed, 0x6C, c)
        d = int(rng.integers(1, 7))
        k = int(rng.integers(1, 9))
        m = int(rng.integers(1, 6))
        net, X = _margin_safe(rng, d, k, m, margin)
        data = Dataset(X, rng.standard_normal(m))
        l1, l2 = rng.uniform(0, 1, 2)
        _, g1, g2 = loss_and_grad(net, data, l1, l2)
        analytic = np.concatenate([g1.ravel(), g2])
        theta = net.params
        numeric = np.empty_like(theta)
        for i in range(theta.size):
            e = np.zeros_like(theta)
            e[i] = h
            up = loss_and_grad(TwoLayerNet.from_params(theta + e, k, d), data, l1, l2)[0]
            dn = loss_and_grad(TwoLayerNet.from_params(theta - e, k, d), data, l1, l2)[0]
            numeric[i] = (up - dn) / (2 * h)
        err = float(np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), 1e-300))
        rows.append(dict(case=f"pair{c}", d=d, k=k, m=m, measured=err, threshold=rtol,
                         passed=err <= rtol))
    return SuiteResult("gradcheck", rows, all(r["passed"] for r in rows))


SUITES = dict(prop2=prop2_suite, theorem1=theorem1_suite, ntk=ntk_suite, gradcheck=gradcheck_suite)
