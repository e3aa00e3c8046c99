"""
Gaussian linear data model, dataset sampling and estimator risk.

Features are drawn as x ~ N(0, diag(sigma_1^2, ..., sigma_d^2)) and labels as
y = <x, theta*> + z with z ~ N(0, noise_std^2).  Datasets store the rows and
labels divided by sqrt(n), so that the Gram matrix X^T X concentrates around
diag(sigma_i^2) and every regularization strength lives on the feature
variance scale.
"""

from dataclasses import dataclass, field

import numpy as np


def make_rng(*keys):
    """Return a counter-based (Philox) generator keyed by a tuple of integers.

    Every stream in the package is derived this way, so a given key tuple
    always yields the same draws regardless of call order or process.
    """
    entropy = [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class GaussianLinearModel:
    """Ground-truth generative model.

    Parameters
    ----------
    theta_star : array_like, shape (d,)
        True coefficients.
    feature_stds : array_like, shape (d,)
        Standard deviations sigma_i of the (independent) features.
    noise_std : float
        Standard deviation of the additive label noise.
    """

    theta_star: np.ndarray
    feature_stds: np.ndarray
    noise_std: float = 1.0

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta_star, dtype=float)).copy()
        stds = np.atleast_1d(np.asarray(self.feature_stds, dtype=float)).copy()
        if theta.ndim != 1 or theta.size < 1:
            raise ValueError("theta_star must be a non-empty vector")
        if stds.shape != theta.shape:
            raise ValueError(
                f"theta_star has length {theta.size} but feature_stds has length {stds.size}"
            )
        if not np.all(stds > 0):
            raise ValueError("feature_stds must be strictly positive")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta_star must be finite")
        if not (np.isfinite(self.noise_std) and self.noise_std >= 0):
            raise ValueError("noise_std must be a non-negative number")
        theta.flags.writeable = False
        stds.flags.writeable = False
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "feature_stds", stds)
        object.__setattr__(self, "noise_std", float(self.noise_std))

    @property
    def d(self):
        return self.theta_star.size

    @property
    def feature_vars(self):
        return self.feature_stds ** 2

    @property
    def null_risk(self):
        """Risk of the zero estimator."""
        return self.noise_std ** 2 + float(np.sum(self.feature_vars * self.theta_star ** 2))

    def with_noise(self, noise_std):
        return GaussianLinearModel(self.theta_star, self.feature_stds, noise_std)


@dataclass(frozen=True)
class Dataset:
    """A training set in the scaled convention (rows x_i / sqrt(n), labels y_i / sqrt(n))."""

    design: np.ndarray
    responses: np.ndarray
    seed: int | None = None
    n: int = field(init=False)

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        y = np.asarray(self.responses, dtype=float)
        if X.ndim != 2:
            raise ValueError("design must be a 2-d array")
        if y.shape != (X.shape[0],):
            raise ValueError(f"responses must have shape ({X.shape[0]},), got {y.shape}")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "n", X.shape[0])

    @property
    def d(self):
        return self.design.shape[1]

    def unscaled(self):
        """Return the raw (x, y) arrays."""
        s = np.sqrt(self.n)
        return self.design * s, self.responses * s


def _draw(model, m, rng):
    x = rng.standard_normal((m, model.d)) * model.feature_stds
    z = rng.standard_normal(m) * model.noise_std
    return x, x @ model.theta_star + z


def sample_dataset(model, n, seed):
    """Draw n iid examples from `model` and return them in the scaled convention.

    The draw is a deterministic function of (model, n, seed).
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    x, y = _draw(model, n, make_rng(seed))
    scale = 1.0 / np.sqrt(n)
    return Dataset(x * scale, y * scale, seed=int(seed))


def population_risk(model, theta_hat):
    """Exact risk E[(y - <x, theta_hat>)^2] of a linear estimator."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    if theta_hat.shape != model.theta_star.shape:
        raise ValueError(
            f"theta_hat has shape {theta_hat.shape}, model has d = {model.d}"
        )
    err = model.theta_star - theta_hat
    return model.noise_std ** 2 + float(np.sum(model.feature_vars * err * err))


def monte_carlo_risk(model, predictor, samples, seed, batch_size=100_000, vectorized=True):
    """Estimate the risk of an arbitrary predictor on fresh draws.

    Parameters
    ----------
    predictor : callable
        Maps an (m, d) array of unscaled feature vectors to m predictions when
        `vectorized` is True, otherwise a single (d,) vector to a float.
    samples : int
        Number of fresh (x, y) pairs, at least 2.

    Returns
    -------
    mean, standard_error : float
        Mean squared error and the standard error of that mean.
    """
    samples = int(samples)
    if samples < 2:
        raise ValueError("samples must be at least 2")
    rng = make_rng(seed)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(batch_size, samples - done)
        x, y = _draw(model, m, rng)
        if vectorized:
            pred = np.asarray(predictor(x), dtype=float).reshape(m)
        else:
            pred = np.array([predictor(row) for row in x], dtype=float)
        sq = (y - pred) ** 2
        total += float(sq.sum())
        total_sq += float((sq * sq).sum())
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return mean, float(np.sqrt(var / samples))


def figure2_model(noise_std=15.0):
    """Two-feature model with a large-variance/small-coefficient feature and a
    small-variance/large-coefficient feature (theta* = (1.5, 10), sigma = (1, 0.15))."""
    return GaussianLinearModel([1.5, 10.0], [1.0, 0.15], noise_std)


def geometric_model(d=16, decay=0.5, noise_std=0.5, theta="unit"):
    """Model with feature_stds = decay**(i - 1) and alternating-sign coefficients.

    theta="unit" (default) sets theta*_i = (-1)^(i-1); theta="equal-signal" sets
    theta*_i = (-1)^(i-1) / sigma_i, so every feature contributes unit signal variance.
    """
    stds = decay ** np.arange(d, dtype=float)
    signs = np.where(np.arange(d) % 2 == 0, 1.0, -1.0)
    if theta == "equal-signal":
        coef = signs / stds
    elif theta == "unit":
        coef = signs
    else:
        raise ValueError(f"unknown theta profile {theta!r}")
    return GaussianLinearModel(coef, stds, noise_std)
