import numpy as np
import pytest

from ddlab.early_stop import gd_fit
from ddlab.model_core import Dataset, geometric_model, sample_dataset
from ddlab.ntk import (
    complement_drift_prediction, decompose, drift_split, first_step_gradient_histogram,
    network_jacobian, ntk_regime_check, signal_drift_prediction,
)
from ddlab.two_layer import TwoLayerNet, forward, init_kaiming


def test_jacobian_dead_output_scale():
    net = TwoLayerNet(np.random.default_rng(0).standard_normal((5, 3)), np.zeros(5))
    J = network_jacobian(net, np.random.default_rng(1).standard_normal((4, 3)))
    assert J.shape == (4, 5 * 3 + 5)
    assert np.all(J[:, :15] == 0)


def test_jacobian_of_single_active_unit_is_input():
    # one unit with positive pre-activations and unit output weight: the W1 block is x
    net = TwoLayerNet([[1.0, 1.0]], [1.0])
    X = np.array([[1.0, 2.0], [0.5, 0.1]])
    np.testing.assert_array_equal(network_jacobian(net, X)[:, :2], X)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(2)
    net = init_kaiming(4, 6, 3)
    X = rng.standard_normal((5, 4))
    assert np.min(np.abs(X @ net.w1.T)) >= 1e-3
    J = network_jacobian(net, X)
    theta = net.params
    h = 1e-6
    num = np.empty_like(J)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        up = forward(TwoLayerNet.from_params(theta + e, 6, 4), X)
        dn = forward(TwoLayerNet.from_params(theta - e, 6, 4), X)
        num[:, i] = (up - dn) / (2 * h)
    assert np.max(np.abs(J - num)) / np.max(np.abs(num)) <= 1e-5


def test_decomposition_properties():
    rng = np.random.default_rng(4)
    J = rng.standard_normal((8, 64))
    dec = decompose(J)
    V = dec.right_vectors
    np.testing.assert_allclose(V.T @ V, np.eye(8), atol=1e-8)
    assert np.all(np.diff(dec.singular_values) <= 0)
    recon = dec.left_vectors * dec.singular_values @ V.T
    assert np.linalg.norm(J - recon) <= 1e-8 * np.linalg.norm(J)
    assert dec.rank == 8 and dec.p == 64 and dec.n == 8


def test_orthonormal_rows_and_rank_one():
    Q, _ = np.linalg.qr(np.random.default_rng(5).standard_normal((20, 6)))
    np.testing.assert_allclose(decompose(Q.T).singular_values, np.ones(6), rtol=1e-12)
    u = np.arange(1.0, 6.0)
    v = np.linspace(-1, 1, 12)
    assert decompose(np.outer(u, v)).rank == 1


def test_drift_split():
    rng = np.random.default_rng(6)
    dec = decompose(rng.standard_normal((8, 64)))
    th0 = rng.standard_normal(64)
    assert drift_split(dec, th0, th0) == (0.0, 0.0)
    s, c = drift_split(dec, th0 + dec.right_vectors[:, 2], th0)
    assert s == pytest.approx(1.0, rel=1e-12) and c == pytest.approx(0.0, abs=1e-12)
    th = rng.standard_normal(64)
    s, c = drift_split(dec, th, th0)
    assert s + c == pytest.approx(np.sum((th - th0) ** 2), rel=1e-10)
    with pytest.raises(ValueError):
        drift_split(dec, np.zeros(3), np.zeros(3))


def test_prediction_limits():
    rng = np.random.default_rng(7)
    J = rng.standard_normal((8, 64))
    dec = decompose(J)
    th0 = rng.standard_normal(64)
    y = rng.standard_normal(8)
    assert complement_drift_prediction(dec, th0, 0.01, 0.0, 50) == 0.0
    rest = drift_split(dec, th0, np.zeros(64))[1]
    assert complement_drift_prediction(dec, th0, 0.01, 1.0, 10 ** 5) == pytest.approx(rest, rel=1e-12)
    assert signal_drift_prediction(dec, th0, y, 0.01, 0.1, 0) == 0.0
    s = dec.singular_values
    limit = np.sum((s / (s ** 2 + 0.1)) ** 2 * (dec.left_vectors.T @ y) ** 2)
    assert signal_drift_prediction(dec, np.zeros(64), y, 0.01, 0.1, 10 ** 5) == pytest.approx(limit, rel=1e-10)
    with pytest.raises(ValueError):
        complement_drift_prediction(dec, th0, 1.0, 3.0, 1)
    with pytest.raises(ValueError):
        signal_drift_prediction(dec, th0, y, 1.0, 0.0, 1)


def test_complement_prediction_monotone():
    rng = np.random.default_rng(8)
    dec = decompose(rng.standard_normal((4, 16)))
    th0 = rng.standard_normal(16)
    vals = [complement_drift_prediction(dec, th0, 0.5, 1.5, t) for t in range(50)]
    assert np.all(np.diff(vals) >= 0)


@pytest.mark.parametrize("eta, lam", [(0.01, 0.1), (0.01, 1.0)])
def test_predictions_match_linear_dynamics(eta, lam):
    rng = np.random.default_rng(9)
    J = rng.standard_normal((8, 64))
    y = rng.standard_normal(8)
    th0 = rng.standard_normal(64)
    dec = decompose(J)
    traj = gd_fit(Dataset(J, y), eta, lam, 100, init=th0)
    for t in [1, 10, 100]:
        signal, comp = drift_split(dec, traj.iterates[t], th0)
        assert signal == pytest.approx(signal_drift_prediction(dec, th0, y, eta, lam, t), rel=1e-8)
        assert comp == pytest.approx(complement_drift_prediction(dec, th0, eta, lam, t), rel=1e-8)


def test_regime_check():
    one = decompose(np.eye(3))
    rep = ntk_regime_check(one, 1e-4)
    assert rep.ratio == pytest.approx(1e4) and rep.in_regime
    small = decompose(np.diag([1.0, 0.01]))
    rep = ntk_regime_check(small, 1.0)
    assert rep.ratio == pytest.approx(1e-4) and not rep.in_regime
    assert ntk_regime_check(small, 0.0).in_regime and ntk_regime_check(small, 0.0).ratio == np.inf
    assert not ntk_regime_check(one, 0.5, threshold=3.0).in_regime


def test_gradient_histogram():
    m = geometric_model()
    data = sample_dataset(m, 64, 0)
    net = init_kaiming(16, 32, 1)
    edges, counts = first_step_gradient_histogram(net, data, 0.0, bins=20)
    assert edges.size == 21 and counts.sum() == 32 * 16
