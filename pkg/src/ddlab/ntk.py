"""
Linearization diagnostics for the two-layer network.

Around an initialization theta_0 the network outputs on the training inputs
are approximated by J (theta - theta_0) + f(theta_0), with J the Jacobian at
theta_0.  Writing J = U S V^T, gradient descent on the weight-decayed loss
moves the parameters inside span(V) (the directions that change the
predictions) and, through the penalty alone, in the orthogonal complement.
For a model that is exactly linear, f = J theta, both parts of the drift
||theta_t - theta_0||^2 have closed forms.
"""

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-10
REGIME_THRESHOLD = 100.0


def network_jacobian(net, inputs):
    """Rows are gradients of f(x_i) with respect to (W1 flattened row-major, w2)."""
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    H = X @ net.w1.T  # (n, k)
    gate = (H > 0).astype(float)
    dW1 = (gate * net.w2)[:, :, None] * X[:, None, :]  # (n, k, d)
    dw2 = np.maximum(H, 0.0)
    return np.concatenate([dW1.reshape(X.shape[0], -1), dw2], axis=1)


@dataclass(frozen=True)
class JacobianDecomposition:
    singular_values: np.ndarray  # nonincreasing, length min(n, p)
    left_vectors: np.ndarray     # (n, min(n, p))
    right_vectors: np.ndarray    # (p, min(n, p))
    p: int
    n: int

    @property
    def rank(self):
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.sum(s > RANK_TOL))

    @property
    def sigma_min(self):
        return float(self.singular_values[-1])

    def signal_basis(self):
        """Right singular vectors whose singular value exceeds RANK_TOL."""
        return self.right_vectors[:, : self.rank]


def decompose(jacobian):
    """Thin SVD of a Jacobian."""
    J = np.asarray(jacobian, dtype=float)
    if J.ndim != 2:
        raise ValueError("jacobian must be a 2-d array")
    U, s, Vt = np.linalg.svd(J, full_matrices=False)
    return JacobianDecomposition(s, U, Vt.T, J.shape[1], J.shape[0])


def _split(decomp, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (decomp.p,):
        raise ValueError(f"expected a parameter vector of length {decomp.p}")
    coef = decomp.signal_basis().T @ v
    total = float(v @ v)
    signal = float(coef @ coef)
    return signal, max(total - signal, 0.0)


def drift_split(decomp, theta_t, theta_0):
    """(||V^T delta||^2, ||V_perp^T delta||^2) for delta = theta_t - theta_0.

    The complement part is the remainder ||delta||^2 - ||V^T delta||^2.
    Directions with zero singular value count as complement.
    """
    return _split(decomp, np.asarray(theta_t, dtype=float) - np.asarray(theta_0, dtype=float))


def complement_drift_prediction(decomp, theta_0, stepsize, lam, t):
    """(1 - (1 - eta lam)^t)^2 ||V_perp^T theta_0||^2."""
    if not 0 <= stepsize * lam < 2:
        raise ValueError("need 0 <= stepsize * lambda < 2")
    _, rest = _split(decomp, theta_0)
    return (1.0 - (1.0 - stepsize * lam) ** t) ** 2 * rest


def signal_drift_prediction(decomp, theta_0, labels, stepsize, lam, t):
    """Closed-form ||V^T (theta_t - theta_0)||^2 for gradient descent on
    1/2 ||J theta - y||^2 + lam/2 ||theta||^2 started at theta_0.

    Terms with singular value <= RANK_TOL are dropped.
    """
    s = decomp.singular_values
    if s.size and not stepsize * (s[0] ** 2 + lam) < 2:
        raise ValueError("need stepsize * (sigma_max^2 + lambda) < 2")
    r = decomp.rank
    s = s[:r]
    U = decomp.left_vectors[:, :r]
    V = decomp.right_vectors[:, :r]
    # <u_i, J theta_0> / sigma_i = <v_i, theta_0>
    start = V.T @ np.asarray(theta_0, dtype=float)
    target = s / (s ** 2 + lam) * (U.T @ np.asarray(labels, dtype=float))
    factor = (1.0 - (1.0 - stepsize * (s ** 2 + lam)) ** t) ** 2
    return float(np.sum(factor * (target - start) ** 2))


@dataclass(frozen=True)
class RegimeReport:
    sigma_min_sq: float
    lam: float
    ratio: float
    in_regime: bool


def ntk_regime_check(decomp, lam, threshold=REGIME_THRESHOLD):
    """Linearization is trustworthy only when sigma_min^2 / lambda >= threshold."""
    smin2 = decomp.sigma_min ** 2
    ratio = np.inf if lam == 0 else smin2 / lam
    return RegimeReport(smin2, float(lam), float(ratio), bool(ratio >= threshold))


def first_step_gradient_histogram(net, data, lambda1, bins=50, limits=None):
    """Histogram of first-layer gradient entries at the first iteration."""
    from .two_layer import loss_and_grad

    _, g1, _ = loss_and_grad(net, data, lambda1, 0.0)
    counts, edges = np.histogram(g1.ravel(), bins=bins, range=limits)
    return edges, counts
