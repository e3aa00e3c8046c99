"""
Two-layer relu network f(x) = relu(W1 x) . w2 trained by full-batch gradient
descent with separate weight decay on each layer.

Training minimizes

    L = 1/2 sum_i (f(x_i) - y_i)^2 + lambda1/2 ||W1||_F^2 + lambda2/2 ||w2||^2

on a scaled dataset.  Since f is positively homogeneous in x, fitting the
scaled rows is the same as fitting the raw rows with the mean squared error.
Many independent runs are advanced in lockstep by `train_batch`; a single run
is just a batch of one, so batched and single results are identical.
"""

from dataclasses import dataclass, replace

import numpy as np

from .model_core import make_rng, monte_carlo_risk, sample_dataset
from .sweep import RiskCurve, run_ordered

DIVERGENCE_FACTOR = 1e6
TEST_SAMPLES = 200_000
TEST_SEED = 20_231


class TrainingDiverged(ArithmeticError):
    pass


@dataclass(frozen=True)
class TwoLayerNet:
    w1: np.ndarray  # (k, d)
    w2: np.ndarray  # (k,)
    init_seed: int | None = None

    def __post_init__(self):
        w1 = np.asarray(self.w1, dtype=float)
        w2 = np.asarray(self.w2, dtype=float)
        if w1.ndim != 2 or w2.shape != (w1.shape[0],) or w1.shape[0] < 1:
            raise ValueError("need w1 of shape (k, d) and w2 of shape (k,) with k >= 1")
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "w2", w2)

    @property
    def k(self):
        return self.w1.shape[0]

    @property
    def d(self):
        return self.w1.shape[1]

    @property
    def params(self):
        """Flattened parameter vector (W1 row-major, then w2)."""
        return np.concatenate([self.w1.ravel(), self.w2])

    @classmethod
    def from_params(cls, theta, k, d, init_seed=None):
        theta = np.asarray(theta, dtype=float)
        return cls(theta[: k * d].reshape(k, d), theta[k * d:], init_seed)


@dataclass(frozen=True)
class TrainConfig:
    lambda1: float = 0.0
    lambda2: float = 0.0
    stepsize: float = 5e-3
    max_iterations: int = 200_000
    convergence_grad_tol: float = 1e-6
    loss_plateau_tol: float = 1e-9
    plateau_window: int = 500

    def __post_init__(self):
        if not self.stepsize > 0:
            raise ValueError("stepsize must be positive")
        if not (self.convergence_grad_tol > 0 and self.loss_plateau_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("penalties must be non-negative")
        if self.max_iterations < 0 or self.plateau_window < 1:
            raise ValueError("invalid iteration limits")


@dataclass(frozen=True)
class TrainTrace:
    loss: np.ndarray  # penalized loss before each update, plus the final value
    grad_norm: np.ndarray
    iterations: int
    stop_reason: str  # "gradient", "plateau", "max_iterations" or "diverged"


def init_kaiming(d, k, seed):
    """W1 ~ N(0, 2/d), w2 ~ N(0, 2/k), deterministic in seed."""
    if d < 1 or k < 1:
        raise ValueError("d and k must be positive")
    rng = make_rng(seed)
    w1 = rng.standard_normal((k, d)) * np.sqrt(2.0 / d)
    w2 = rng.standard_normal(k) * np.sqrt(2.0 / k)
    return TwoLayerNet(w1, w2, int(seed))


def forward(net, x):
    """Network output for one input (d,) or a batch (m, d)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.d:
        raise ValueError(f"input dimension {x.shape[-1]} does not match d = {net.d}")
    return np.maximum(x @ net.w1.T, 0.0) @ net.w2


def predictor(net):
    return lambda x: forward(net, x)


def _penalized_terms(W1, w2, X, Y, lam1, lam2):
    """Loss, gradients and pre-activations for a batch of runs.

    Shapes: W1 (B, k, d), w2 (B, k), X (B, n, d), Y (B, n), lam (B,).
    """
    H = X @ W1.transpose(0, 2, 1)
    A = np.maximum(H, 0.0)
    r = (A @ w2[:, :, None])[..., 0] - Y
    g2 = (A.transpose(0, 2, 1) @ r[:, :, None])[..., 0] + lam2[:, None] * w2
    D = r[:, :, None] * w2[:, None, :] * (H > 0)
    g1 = D.transpose(0, 2, 1) @ X + lam1[:, None, None] * W1
    loss = 0.5 * np.einsum("bn,bn->b", r, r)
    loss += 0.5 * lam1 * np.einsum("bkd,bkd->b", W1, W1) + 0.5 * lam2 * np.einsum("bk,bk->b", w2, w2)
    gnorm = np.sqrt(np.einsum("bkd,bkd->b", g1, g1) + np.einsum("bk,bk->b", g2, g2))
    return loss, gnorm, g1, g2


def loss_and_grad(net, data, lambda1, lambda2):
    """Penalized loss and its gradient (dW1, dw2) for one network."""
    lam1 = np.array([float(lambda1)])
    lam2 = np.array([float(lambda2)])
    loss, _, g1, g2 = _penalized_terms(net.w1[None], net.w2[None], data.design[None],
                                       data.responses[None], lam1, lam2)
    return float(loss[0]), g1[0], g2[0]


def train_batch(W1, w2, X, Y, lam1, lam2, cfg, record=False, checkpoints=None):
    """Train B independent networks in lockstep, each with its own stopping time.

    Runs that meet a stopping rule are frozen and dropped from the active
    set.  Returns (W1, w2, reasons, iterations, traces, snapshots): traces is
    a list of (loss, grad_norm) arrays when `record` is set, and snapshots
    maps each requested checkpoint iteration to copies of (W1, w2).
    """
    W1 = np.array(W1, dtype=float)
    w2 = np.array(w2, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    lam1 = np.broadcast_to(np.asarray(lam1, dtype=float), (W1.shape[0],)).copy()
    lam2 = np.broadcast_to(np.asarray(lam2, dtype=float), (W1.shape[0],)).copy()
    B = W1.shape[0]
    eta = cfg.stepsize
    window = cfg.plateau_window
    reasons = np.array(["max_iterations"] * B, dtype=object)
    iterations = np.full(B, cfg.max_iterations)
    hist = np.full((B, window + 1), np.nan)  # ring buffer of recent losses
    loss_log = [[] for _ in range(B)] if record else None
    grad_log = [[] for _ in range(B)] if record else None
    checkpoints = sorted(set(int(c) for c in checkpoints)) if checkpoints is not None else []
    snaps = {}
    initial = None
    active = np.arange(B)

    def snapshot(t):
        if t in checkpoints:
            snaps[t] = (W1.copy(), w2.copy())

    snapshot(0)
    for t in range(cfg.max_iterations + 1):
        a = active
        loss, gnorm, g1, g2 = _penalized_terms(W1[a], w2[a], X[a], Y[a], lam1[a], lam2[a])
        if initial is None:
            initial = loss.copy()
            init_by_run = np.empty(B)
            init_by_run[a] = initial
        hist[a, t % (window + 1)] = loss
        if record:
            for j, b in enumerate(a):
                loss_log[b].append(loss[j])
                grad_log[b].append(gnorm[j])
        done = np.zeros(a.size, dtype=bool)
        bad = ~np.isfinite(loss) | (loss > DIVERGENCE_FACTOR * init_by_run[a])
        reasons[a[bad]] = "diverged"
        done |= bad
        conv = ~done & (gnorm <= cfg.convergence_grad_tol)
        reasons[a[conv]] = "gradient"
        done |= conv
        if t >= window:
            old = hist[a, (t - window) % (window + 1)]
            flat = ~done & (np.abs(old - loss) <= cfg.loss_plateau_tol * np.abs(old))
            reasons[a[flat]] = "plateau"
            done |= flat
        iterations[a[done]] = t
        if t == cfg.max_iterations:
            break
        keep = ~done
        if not keep.all():
            active = a[keep]
            g1, g2 = g1[keep], g2[keep]
            if active.size == 0:
                break
        W1[active] -= eta * g1
        w2[active] -= eta * g2
        snapshot(t + 1)
    for c in checkpoints:
        if c not in snaps:
            # every run stopped before this checkpoint; weights are final
            snaps[c] = (W1.copy(), w2.copy())
    traces = None
    if record:
        traces = [(np.array(loss_log[b]), np.array(grad_log[b])) for b in range(B)]
    return W1, w2, reasons, iterations, traces, snaps


def train(net, data, cfg):
    """Train one network; returns (trained net, TrainTrace).

    Raises TrainingDiverged if the loss exceeds 1e6 times its initial value.
    """
    W1, w2, reasons, iters, traces, _ = train_batch(
        net.w1[None], net.w2[None], data.design[None], data.responses[None],
        [cfg.lambda1], [cfg.lambda2], cfg, record=True)
    if reasons[0] == "diverged":
        raise TrainingDiverged(f"loss diverged after {iters[0]} iterations")
    loss, gnorm = traces[0]
    return TwoLayerNet(W1[0], w2[0], net.init_seed), TrainTrace(loss, gnorm, int(iters[0]), reasons[0])


def weights_risk(model, W1, w2, test_x, test_y):
    """Risk of each network in a batch on a shared held-out set."""
    out = np.empty(W1.shape[0])
    for b in range(W1.shape[0]):
        pred = np.maximum(test_x @ W1[b].T, 0.0) @ w2[b]
        out[b] = np.mean((test_y - pred) ** 2)
    return out


def seed_pair(seed):
    """(data seed, init seed) used for replicate `seed` of a network sweep."""
    return int(seed), int(make_rng(seed, 1).integers(0, 2**63))


def _risk(model, W1, w2, test_samples, test_seed):
    net = TwoLayerNet(W1, w2)
    return monte_carlo_risk(model, predictor(net), test_samples, test_seed)[0]


def _lambda_task(args):
    model, n, k, grid, layer_scale, seed, cfg, test_samples, test_seed = args
    data_seed, init_seed = seed_pair(seed)
    data = sample_dataset(model, n, data_seed)
    net = init_kaiming(model.d, k, init_seed)
    B = grid.size
    W1, w2, reasons, iters, _, _ = train_batch(
        np.repeat(net.w1[None], B, axis=0), np.repeat(net.w2[None], B, axis=0),
        np.repeat(data.design[None], B, axis=0), np.repeat(data.responses[None], B, axis=0),
        1.0 / grid, layer_scale / grid, cfg)
    risk = np.full(B, np.nan)
    for b in range(B):
        if reasons[b] != "diverged":
            risk[b] = _risk(model, W1[b], w2[b], test_samples, test_seed)
    return risk, list(reasons), iters


def nn_lambda_sweep(model, n, k, grid, layer_scale=1.0, seeds=range(5), cfg=TrainConfig(),
                    test_samples=TEST_SAMPLES, test_seed=TEST_SEED, workers=1):
    """Risk of weight-decayed two-layer networks along a grid of 1/lambda.

    At grid value g the penalties are lambda1 = 1/g and lambda2 = layer_scale/g
    (the penalties in `cfg` are ignored).  Each seed fixes one dataset and one
    Kaiming initialization shared by every grid point; all networks are scored
    on the same Monte Carlo test draw.  The total is the mean over seeds and
    each seed's curve is kept as a component.  Points where any run diverged
    are marked invalid.  One task per seed, so results do not depend on
    `workers`.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must hold positive, strictly increasing inverse-lambda values")
    if not layer_scale > 0:
        raise ValueError("layer_scale must be positive")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    tasks = [(model, n, k, grid, float(layer_scale), s, cfg, test_samples, test_seed) for s in seeds]
    results = run_ordered(_lambda_task, tasks, workers)
    risks = np.array([r[0] for r in results])
    valid = np.all(np.isfinite(risks), axis=0)
    total = np.where(valid, risks.mean(axis=0), np.nan)
    meta = dict(kind="nn-lambda", n=n, k=k, layer_scale=float(layer_scale), seeds=seeds,
                stop_reasons=[r[1] for r in results],
                iterations=np.array([r[2] for r in results]),
                test_samples=test_samples, test_seed=test_seed)
    names = [f"seed_{s}" for s in seeds]
    return RiskCurve(grid, total, risks, names, "inv_lambda", model.noise_std ** 2, valid, meta)


def default_checkpoints(max_iterations, per_decade=10):
    """0 plus log-spaced integers up to max_iterations."""
    if max_iterations < 1:
        return np.array([0])
    top = np.log10(max_iterations)
    pts = np.round(10 ** np.linspace(0, top, int(np.ceil(top * per_decade)) + 1)).astype(int)
    return np.unique(np.r_[0, pts, max_iterations])


def _epoch_task(args):
    model, n, k, seed, cfg, checkpoints, test_samples, test_seed = args
    data_seed, init_seed = seed_pair(seed)
    data = sample_dataset(model, n, data_seed)
    net = init_kaiming(model.d, k, init_seed)
    _, _, reasons, iters, _, snaps = train_batch(
        net.w1[None], net.w2[None], data.design[None], data.responses[None],
        [cfg.lambda1], [cfg.lambda2], cfg, checkpoints=checkpoints)
    if reasons[0] == "diverged":
        return np.full(len(checkpoints), np.nan), reasons[0], int(iters[0])
    risk = np.array([_risk(model, snaps[c][0][0], snaps[c][1][0], test_samples, test_seed)
                     for c in checkpoints])
    return risk, reasons[0], int(iters[0])


def nn_epoch_curve(model, n, k, seeds=range(5), cfg=TrainConfig(), checkpoints=None,
                   test_samples=TEST_SAMPLES, test_seed=TEST_SEED, workers=1):
    """Monte Carlo risk along the training trajectory at iteration checkpoints.

    Runs that stop before a checkpoint contribute their final weights there.
    """
    if checkpoints is None:
        checkpoints = default_checkpoints(cfg.max_iterations)
    checkpoints = np.asarray(checkpoints, dtype=int)
    if checkpoints.ndim != 1 or np.any(np.diff(checkpoints) <= 0) or np.any(checkpoints < 0):
        raise ValueError("checkpoints must be non-negative and strictly increasing")
    seeds = [int(s) for s in seeds]
    tasks = [(model, n, k, s, cfg, checkpoints.tolist(), test_samples, test_seed) for s in seeds]
    results = run_ordered(_epoch_task, tasks, workers)
    risks = np.array([r[0] for r in results])
    valid = np.all(np.isfinite(risks), axis=0)
    meta = dict(kind="nn-epoch", n=n, k=k, seeds=seeds, stop_reasons=[r[1] for r in results],
                iterations=[r[2] for r in results], test_samples=test_samples, test_seed=test_seed)
    names = [f"seed_{s}" for s in seeds]
    return RiskCurve(checkpoints.astype(float), np.where(valid, risks.mean(axis=0), np.nan),
                     risks, names, "t", model.noise_std ** 2, valid, meta)
