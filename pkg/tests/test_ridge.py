import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddlab.model_core import Dataset, GaussianLinearModel, figure2_model, sample_dataset
from ddlab.ridge import (
    BoundConfig, SingularSystemError, align_lambdas, analytic_risk, optimal_lambdas,
    optimal_risk, ridge_fit, theorem1_bound, tikhonov_fit,
)
from ddlab.sweep import feature_tradeoff, inverse_lambda_grid


def orthogonal_design(n, gains, seed=0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, len(gains))))
    return Q * np.sqrt(gains)


def test_orthonormal_design_shrinks_by_one_plus_lambda():
    X = orthogonal_design(30, [1.0, 1.0, 1.0])
    y = np.random.default_rng(1).standard_normal(30)
    v = X.T @ y
    for lam in [0.0, 0.5, 3.0]:
        np.testing.assert_allclose(ridge_fit(Dataset(X, y), lam).theta_hat, v / (1 + lam), rtol=1e-12)


def test_diagonal_gram_decouples():
    g = np.array([2.0, 0.5, 0.1])
    lam = np.array([0.3, 0.0, 1.7])
    X = orthogonal_design(40, g, seed=2)
    y = np.random.default_rng(3).standard_normal(40)
    np.testing.assert_allclose(tikhonov_fit(Dataset(X, y), lam).theta_hat,
                               (X.T @ y) / (g + lam), rtol=1e-11)


def test_huge_lambda_kills_estimate():
    data = sample_dataset(figure2_model(1.0), 100, 0)
    lam = 1e8
    th = ridge_fit(data, lam).theta_hat
    assert np.linalg.norm(th) <= np.linalg.norm(data.design.T @ data.responses) / lam


def test_least_squares_normal_equations():
    data = sample_dataset(GaussianLinearModel(np.ones(4), [1, 2, 0.5, 1], 1.0), 500, 1)
    th = ridge_fit(data, 0.0).theta_hat
    X, y = data.design, data.responses
    assert np.max(np.abs(X.T @ (X @ th - y))) < 1e-10


def test_singular_system_rejected():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    with pytest.raises(SingularSystemError):
        ridge_fit(Dataset(X, np.ones(3)), 0.0)
    # a positive penalty restores invertibility
    ridge_fit(Dataset(X, np.ones(3)), 1e-3)


def test_tikhonov_constant_equals_ridge_bitwise():
    data = sample_dataset(figure2_model(1.0), 60, 9)
    a = ridge_fit(data, 0.37).theta_hat
    b = tikhonov_fit(data, np.full(2, 0.37)).theta_hat
    assert np.array_equal(a, b)


def test_one_huge_penalty_matches_deleted_column():
    m = GaussianLinearModel([1.0, -2.0, 0.5, 3.0], [1.0, 0.7, 1.3, 0.4], 1.0)
    data = sample_dataset(m, 200, 4)
    lam = np.array([0.1, 0.2, 1e12, 0.05])
    th = tikhonov_fit(data, lam).theta_hat
    keep = [0, 1, 3]
    Xr = data.design[:, keep]
    ref = np.linalg.solve(Xr.T @ Xr + np.diag(lam[keep]), Xr.T @ data.responses)
    assert abs(th[2]) < 1e-6
    np.testing.assert_allclose(th[keep], ref, atol=1e-6)


def test_analytic_limits():
    m = GaussianLinearModel([1.0, -2.0, 0.5], [1.0, 0.3, 2.0], 0.8)
    n = 50
    assert analytic_risk(m, n, np.zeros(3)).total == pytest.approx(0.64 * (1 + 3 / n), rel=1e-14)
    assert analytic_risk(m, n, np.full(3, np.inf)).total == pytest.approx(m.null_risk, rel=1e-14)
    assert analytic_risk(m, n, np.full(3, 1e12)).total == pytest.approx(m.null_risk, rel=1e-9)


def test_decomposition_sums():
    m = figure2_model(1.0)
    dec = analytic_risk(m, 100, [0.01, 0.3])
    assert dec.total == pytest.approx(dec.noise_floor + dec.bias_terms.sum() + dec.variance_terms.sum(),
                                      rel=1e-15)
    assert len(dec.per_feature) == 2


def monte_carlo_ridge_risk(model, n, lams, reps, seed):
    """Mean exact risk of uniform ridge over independent datasets; solves the
    2x2 systems in closed form for all datasets at once."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((reps, n, 2)) * model.feature_stds
    y = x @ model.theta_star + model.noise_std * rng.standard_normal((reps, n))
    G = np.einsum("rni,rnj->rij", x, x) / n
    b = np.einsum("rni,rn->ri", x, y) / n
    out = []
    for lam in lams:
        a11, a12, a22 = G[:, 0, 0] + lam, G[:, 0, 1], G[:, 1, 1] + lam
        det = a11 * a22 - a12 ** 2
        t1 = (a22 * b[:, 0] - a12 * b[:, 1]) / det
        t2 = (a11 * b[:, 1] - a12 * b[:, 0]) / det
        err = model.feature_vars[0] * (model.theta_star[0] - t1) ** 2
        err += model.feature_vars[1] * (model.theta_star[1] - t2) ** 2
        out.append(model.noise_std ** 2 + err.mean())
    return np.array(out)


def test_analytic_risk_matches_simulation():
    m = figure2_model(1.0)
    n = 1000
    lams = 1 / inverse_lambda_grid(1e-2, 1e4, 2)
    sim = monte_carlo_ridge_risk(m, n, lams, 10_000, 0)
    ana = np.array([analytic_risk(m, n, np.full(2, lam)).total for lam in lams])
    np.testing.assert_allclose(ana, sim, rtol=0.02)


def test_bound_scales_inverse_n_without_noise():
    m = GaussianLinearModel([1.0, 2.0, -1.0], [1.0, 0.5, 0.2], 0.0)
    for lam in [0.0, 0.1, 10.0]:
        assert theorem1_bound(m, 100, lam) / theorem1_bound(m, 200, lam) == pytest.approx(2.0, rel=1e-12)


def test_bound_large_lambda_limit():
    m = GaussianLinearModel(np.ones(4), [1.0, 0.5, 0.2, 2.0], 1.5)
    n = 300
    cfg = BoundConfig(2.0)
    limit = 2.0 * np.sqrt(4) / n * 1.5 ** 2
    assert theorem1_bound(m, n, 1e9, cfg) == pytest.approx(limit, rel=1e-6)


def test_bound_d1_uses_unit_log():
    m = GaussianLinearModel([1.0], [1.0], 1.0)
    expected = (1 / 10) * ((1.0 + 1.0) * 1.0 + 1.0 / np.sqrt(10)) ** 2 + 1 / 10
    assert theorem1_bound(m, 10, 0.0) == pytest.approx(expected, rel=1e-14)


def test_bound_config_validation():
    with pytest.raises(ValueError):
        BoundConfig(0.0)


def test_optimal_lambdas_examples():
    m = GaussianLinearModel([2.0, 0.5], [1.0, 1.0], 1.0)
    np.testing.assert_allclose(optimal_lambdas(m, 100), [0.0025, 0.04], rtol=1e-14)
    eq = GaussianLinearModel([3.0, 3.0, -3.0], [1.0, 0.2, 5.0], 1.0)
    lam = optimal_lambdas(eq, 10)
    assert np.all(lam == lam[0])
    ratio = optimal_lambdas(figure2_model(1.0), 100)
    assert ratio[1] / ratio[0] == pytest.approx(0.0225, rel=1e-12)


def test_optimal_lambdas_rejections():
    with pytest.raises(ValueError, match=r"theta_star\[1\]"):
        optimal_lambdas(GaussianLinearModel([1.0, 0.0], [1.0, 1.0], 1.0), 10)
    with pytest.raises(ValueError):
        optimal_lambdas(GaussianLinearModel([1.0, 2.0], [1.0, 1.0], 0.0), 10)


def test_optimal_risk_closed_form_matches_decomposition():
    m = GaussianLinearModel([1.5, 10.0, -0.3], [1.0, 0.15, 2.0], 2.0)
    for n in [10, 100, 1000]:
        a = analytic_risk(m, n, optimal_lambdas(m, n)).total
        assert a == pytest.approx(optimal_risk(m, n), rel=1e-12)


def test_optimal_risk_vanishing_noise_limit():
    m = figure2_model(1.0)
    assert optimal_risk(m, 10 ** 12) == pytest.approx(1.0, rel=1e-10)


def test_optimal_is_local_minimum():
    m = GaussianLinearModel([1.5, 10.0, -0.3], [1.0, 0.15, 2.0], 2.0)
    n = 80
    lam = optimal_lambdas(m, n)
    best = analytic_risk(m, n, lam).total
    for i in range(3):
        for f in [0.9, 0.95, 1.05, 1.1]:
            pert = lam.copy()
            pert[i] *= f
            assert analytic_risk(m, n, pert).total >= best


def test_optimal_lambdas_ignore_feature_scales():
    a = GaussianLinearModel([1.0, -4.0], [1.0, 0.1], 1.0)
    b = GaussianLinearModel([1.0, -4.0], [3.0, 0.7], 1.0)
    np.testing.assert_array_equal(optimal_lambdas(a, 50), optimal_lambdas(b, 50))


def test_align_lambdas():
    m = figure2_model(1.0)
    n = 100
    anchor = (1.0 / n) / 1.5 ** 2
    np.testing.assert_allclose(align_lambdas(m, 0, anchor), optimal_lambdas(m, n), rtol=1e-14)
    single = GaussianLinearModel([2.0], [1.0], 1.0)
    assert align_lambdas(single, 0, 0.7).tolist() == [0.7]
    with pytest.raises(IndexError):
        align_lambdas(m, 2, 1.0)


def test_aligned_minima_coincide_on_grid():
    m = figure2_model(1.0)
    n = 100
    grid = inverse_lambda_grid(1e-1, 1e5, 100)
    argmins = []
    for i in range(2):
        lams = np.array([align_lambdas(m, 0, 1 / g)[i] for g in grid])
        argmins.append(int(np.argmin(feature_tradeoff(m, n, i, lams))))
    assert abs(argmins[0] - argmins[1]) <= 1


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 3), st.floats(-5, 5), st.floats(0.1, 3), st.integers(1, 1000))
def test_bias_up_variance_down(std, theta, noise, n):
    m = GaussianLinearModel([theta], [std], noise)
    lams = np.logspace(-4, 4, 50)
    decs = [analytic_risk(m, n, [lam]) for lam in lams]
    bias = np.array([d.bias_terms[0] for d in decs])
    var = np.array([d.variance_terms[0] for d in decs])
    assert np.all(np.diff(bias) >= -1e-15 * bias[1:])
    assert np.all(np.diff(var) <= 1e-15 * var[:-1])
    assert np.all(bias >= 0) and np.all(var >= 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3), st.floats(0.1, 5), st.floats(0.1, 3), st.integers(1, 1000))
def test_single_tradeoff_minimum_location(std, theta, noise, n):
    m = GaussianLinearModel([theta], [std], noise)
    lam_star = optimal_lambdas(m, n)[0]
    grid = lam_star * 10 ** (np.arange(-300, 301) / 100)
    vals = feature_tradeoff(m, n, 0, grid)
    assert abs(int(np.argmin(vals)) - 300) <= 1
