"""
Ridge and per-feature (Tikhonov) least squares, their analytic risk, the
finite-sample approximation bound, and the optimal / aligned penalties.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

RCOND_MIN = 1e-12


class SingularSystemError(np.linalg.LinAlgError):
    """Raised when the regularized Gram matrix is numerically singular."""


@dataclass(frozen=True)
class TikhonovSolution:
    theta_hat: np.ndarray
    lambdas: np.ndarray


@dataclass(frozen=True)
class RiskDecomposition:
    """Risk split into noise floor and per-feature bias/variance terms."""

    total: float
    noise_floor: float
    bias_terms: np.ndarray
    variance_terms: np.ndarray

    @property
    def per_feature(self):
        return list(zip(self.bias_terms.tolist(), self.variance_terms.tolist()))

    @property
    def feature_terms(self):
        return self.bias_terms + self.variance_terms


@dataclass(frozen=True)
class BoundConfig:
    constant_c: float = 1.0

    def __post_init__(self):
        if not self.constant_c > 0:
            raise ValueError("constant_c must be positive")


def _as_lambdas(lambdas, d):
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim == 0:
        lam = np.full(d, float(lam))
    if lam.shape != (d,):
        raise ValueError(f"expected {d} regularization values, got shape {lam.shape}")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError("regularization values must be finite and non-negative")
    return lam


def solve_tikhonov(gram, rhs, lambdas):
    """Solve (gram + diag(lambdas)) theta = rhs with a Cholesky factorization."""
    A = gram + np.diag(lambdas)
    diag = np.diag(A)
    if np.any(diag <= 0):
        raise SingularSystemError("regularized Gram matrix has a zero diagonal entry")
    # Reciprocal condition number after symmetric diagonal scaling, so that a
    # single huge penalty does not count as ill-conditioning.
    scale = 1.0 / np.sqrt(diag)
    ev = np.linalg.eigvalsh(A * scale[:, None] * scale[None, :])
    if ev[0] / ev[-1] < RCOND_MIN:
        raise SingularSystemError(f"regularized Gram matrix is singular (rcond = {ev[0] / ev[-1]:.3e})")
    factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def tikhonov_fit(data, lambdas):
    """Minimize 1/2 ||X theta - y||^2 + 1/2 sum_i lambdas_i theta_i^2 on the scaled data."""
    X = data.design
    lam = _as_lambdas(lambdas, X.shape[1])
    theta = solve_tikhonov(X.T @ X, X.T @ data.responses, lam)
    return TikhonovSolution(theta, lam)


def ridge_fit(data, lam):
    """Uniform ridge; identical to `tikhonov_fit` with a constant vector."""
    lam = float(lam)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    return tikhonov_fit(data, np.full(data.design.shape[1], lam))


def analytic_risk(model, n, lambdas):
    """Approximate risk of the (per-feature) ridge estimator trained on n samples.

    Each feature contributes
        bias_i     = sigma_i^2 theta_i^2 (lambda_i / (sigma_i^2 + lambda_i))^2
        variance_i = (noise^2 / n) sigma_i^2 (sigma_i / (sigma_i^2 + lambda_i))^2
    on top of the noise floor noise^2.  Infinite lambdas are allowed and give
    the pure-bias limit.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim == 0:
        lam = np.full(model.d, float(lam))
    if lam.shape != (model.d,) or np.any(lam < 0) or np.any(np.isnan(lam)):
        raise ValueError("lambdas must be a non-negative vector of length d")
    s2 = model.feature_vars
    with np.errstate(invalid="ignore"):
        shrink = np.where(np.isinf(lam), 1.0, lam / (s2 + lam))
    keep = np.where(np.isinf(lam), 0.0, model.feature_stds / (s2 + lam))
    bias = s2 * model.theta_star ** 2 * shrink ** 2
    var = (model.noise_std ** 2 / n) * s2 * keep ** 2
    floor = model.noise_std ** 2
    return RiskDecomposition(floor + float(np.sum(bias + var)), floor, bias, var)


def theorem1_bound(model, n, lam, cfg=BoundConfig()):
    """High-probability bound on |R(ridge estimate) - analytic risk| for uniform lambda.

    log d is replaced by max(log d, 1) so that d = 1 does not zero the term.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    d = model.d
    s2 = model.feature_vars
    sigma = model.noise_std
    log_d = max(np.log(d), 1.0)
    prefactor = s2.max() ** 4 / np.min(s2 + lam) ** 4 * (d / n)
    inner = ((s2.min() + lam) / s2.max() + 1.0) * np.linalg.norm(s2 * model.theta_star)
    inner += d * log_d / np.sqrt(n) * sigma
    return cfg.constant_c * (prefactor * inner ** 2 + np.sqrt(d) / n * sigma ** 2)


def _check_nonzero(theta):
    zero = np.flatnonzero(theta == 0)
    if zero.size:
        raise ValueError(
            f"theta_star[{zero[0]}] is zero; its optimal penalty would be infinite"
        )


def optimal_lambdas(model, n):
    """Per-feature penalties (noise^2 / n) / theta_i^2 that minimize the analytic risk."""
    _check_nonzero(model.theta_star)
    if not model.noise_std > 0:
        raise ValueError("optimal penalties require noise_std > 0")
    return (model.noise_std ** 2 / n) / model.theta_star ** 2


def optimal_risk(model, n):
    """Analytic risk evaluated at `optimal_lambdas`, in closed form."""
    lam = optimal_lambdas(model, n)
    s2 = model.feature_vars
    q = model.noise_std ** 2 / n
    return model.noise_std ** 2 + q * float(np.sum(s2 / (s2 + lam)))


def align_lambdas(model, anchor_feature, anchor_lambda):
    """Scale penalties by (theta_j / theta_i)^2 so all per-feature minima coincide.

    Feature `anchor_feature` gets `anchor_lambda`; sweeping the anchor moves
    every per-feature tradeoff together.
    """
    theta = model.theta_star
    _check_nonzero(theta)
    j = int(anchor_feature)
    if not 0 <= j < model.d:
        raise IndexError(f"anchor_feature {j} out of range for d = {model.d}")
    if not anchor_lambda > 0:
        raise ValueError("anchor_lambda must be positive")
    return anchor_lambda * (theta[j] / theta) ** 2
