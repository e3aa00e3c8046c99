"""
Gradient descent on the linear least-squares loss with per-coordinate
stepsizes, the closed-form early-stopping risk and its ridge equivalent.
"""

from dataclasses import dataclass

import numpy as np

from .ridge import RiskDecomposition

FULL_HISTORY = 10_000
THIN_RATIO = 1.01
DIVERGENCE_FACTOR = 1e12


class StabilityError(ValueError):
    """Stepsizes too large for the iteration to contract."""


class DivergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GDTrajectory:
    iterates: np.ndarray  # (m, d); row k is theta at iteration steps[k]
    steps: np.ndarray
    stepsizes: np.ndarray
    regularization: np.ndarray
    iterations_run: int

    @property
    def final(self):
        return self.iterates[-1]


def _record_steps(iterations):
    """Iterations kept in a trajectory: all of them up to FULL_HISTORY, then a
    geometric subset (ratio THIN_RATIO), always including the last."""
    if iterations <= FULL_HISTORY:
        return np.arange(iterations + 1)
    tail = []
    t = float(FULL_HISTORY)
    while t < iterations:
        t *= THIN_RATIO
        tail.append(min(int(np.ceil(t)), iterations))
    return np.unique(np.concatenate([np.arange(FULL_HISTORY + 1), tail]))


def check_stability(gram, stepsizes, lambdas):
    """Require spectral radius of diag(eta)(G + diag(lambda)) below 2."""
    d = gram.shape[0]
    root = np.sqrt(np.broadcast_to(np.asarray(stepsizes, dtype=float), (d,)))
    lambdas = np.broadcast_to(np.asarray(lambdas, dtype=float), (d,))
    M = root[:, None] * (gram + np.diag(lambdas)) * root[None, :]
    top = np.linalg.eigvalsh(M)[-1]
    if top >= 2.0:
        raise StabilityError(
            f"unstable stepsizes: largest eigenvalue of eta*(G + Lambda) is {top:.4g} >= 2"
        )
    return top


def gd_fit(data, stepsizes, lambdas, iterations, init=None):
    """Run `iterations` steps of

        theta_i <- theta_i - eta_i * ((X^T (X theta - y))_i + lambda_i theta_i)

    starting from `init` (zeros by default).  Iterate 0 is the initial point.
    """
    X, y = data.design, data.responses
    d = X.shape[1]
    eta = np.broadcast_to(np.asarray(stepsizes, dtype=float), (d,)).copy()
    lam = np.broadcast_to(np.asarray(lambdas, dtype=float), (d,)).copy()
    if np.any(eta <= 0):
        raise ValueError("stepsizes must be positive")
    if np.any(lam < 0):
        raise ValueError("lambdas must be non-negative")
    iterations = int(iterations)
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    theta = np.zeros(d) if init is None else np.array(init, dtype=float)
    if theta.shape != (d,):
        raise ValueError(f"init must have shape ({d},)")

    gram = X.T @ X
    check_stability(gram, eta, lam)
    Xty = X.T @ y
    limit = DIVERGENCE_FACTOR * max(np.linalg.norm(theta), np.linalg.norm(Xty), 1.0)

    keep = _record_steps(iterations)
    out = np.empty((keep.size, d))
    out[0] = theta
    slot = 1
    for t in range(1, iterations + 1):
        theta = theta - eta * (gram @ theta - Xty + lam * theta)
        if slot < keep.size and keep[slot] == t:
            out[slot] = theta
            slot += 1
        if t % 1000 == 0 and not np.all(np.isfinite(theta)):
            raise DivergenceError(f"gradient descent diverged by iteration {t}")
    if not np.all(np.isfinite(theta)) or np.linalg.norm(theta) > limit:
        raise DivergenceError("gradient descent diverged")
    return GDTrajectory(out, keep, eta, lam, iterations)


def _powers(rate, t):
    """Return ((1 - rate)^t, 1 - (1 - rate)^t) without cancellation for small rates."""
    if np.any(rate <= 0) or np.any(rate >= 2):
        raise StabilityError("need 0 < eta_i * sigma_i^2 < 2 for every feature")
    ct = np.empty_like(rate)
    done = np.empty_like(rate)
    pos = rate < 1
    log_c = t * np.log1p(-rate[pos])
    ct[pos] = np.exp(log_c)
    done[pos] = -np.expm1(log_c)
    ct[~pos] = (1.0 - rate[~pos]) ** t
    done[~pos] = 1.0 - ct[~pos]
    return ct, done


def early_stopping_risk(model, n, stepsizes, t):
    """Risk of t unregularized gradient steps from zero:

        U_i(t) = sigma_i^2 theta_i^2 (1 - eta_i sigma_i^2)^(2t)
                 + (noise^2 / n) (1 - (1 - eta_i sigma_i^2)^t)^2
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if n < 1:
        raise ValueError("n must be at least 1")
    eta = np.broadcast_to(np.asarray(stepsizes, dtype=float), (model.d,))
    ct, done = _powers(eta * model.feature_vars, t)
    bias = model.feature_vars * model.theta_star ** 2 * ct ** 2
    var = (model.noise_std ** 2 / n) * done ** 2
    floor = model.noise_std ** 2
    return RiskDecomposition(floor + float(np.sum(bias + var)), floor, bias, var)


def lambda_equivalent(feature_stds, stepsizes, t):
    """Per-feature penalties sigma_i^2 / (1 - (1 - eta_i sigma_i^2)^t) - sigma_i^2.

    With these, the analytic ridge risk equals the early-stopping risk at t,
    term by term.  Values are negative for odd t when eta_i sigma_i^2 > 1.
    """
    s2 = np.asarray(feature_stds, dtype=float) ** 2
    eta = np.broadcast_to(np.asarray(stepsizes, dtype=float), s2.shape)
    if t < 1:
        raise ValueError("t must be at least 1 (t = 0 corresponds to infinite penalties)")
    ct, done = _powers(eta * s2, t)
    # s2 / (1 - c^t) - s2, rearranged to avoid cancellation
    return s2 * ct / done
