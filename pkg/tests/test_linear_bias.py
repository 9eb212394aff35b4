import numpy as np
import pytest

from riskfair.dist1d import Gaussian
from riskfair.fairness_metrics import unfairness
from riskfair.linear_bias import (
    GroupedData,
    LinearBiasModel,
    LinearFit,
    RateConfig,
    SimulationProtocol,
    SingularDesignError,
    delta_n,
    fit_ls,
    intercepts_tau,
    noise_to_unfairness_bias,
    population_risk,
    predict_tau,
    run_simulation_study,
    sample_size_check,
    sample_size_threshold,
    simulate,
    tau_hat,
    theta,
    unfairness_closed_form,
)


def small_model(sigma=1.0, sizes=(40, 60, 50)):
    return LinearBiasModel(np.array([1.0, -2.0, 0.5]), np.array([1.0, -1.0, 0.3]), sigma,
                           np.eye(3), sizes)


def test_model_rejects_non_spd():
    with pytest.raises(ValueError):
        LinearBiasModel(np.ones(2), np.zeros(2), 1.0, np.array([[1.0, 2.0], [2.0, 1.0]]), (5, 5))
    with pytest.raises(ValueError):
        LinearBiasModel(np.ones(2), np.zeros(2), 0.0, np.eye(2), (5, 5))


def test_simulate_noiseless_and_deterministic():
    m = small_model(sigma=1e-12)
    data = simulate(m, 3)
    for s, (x, y) in enumerate(zip(data.X, data.Y)):
        np.testing.assert_allclose(y, x @ m.beta_star + m.b_star[s], atol=1e-9)
    again = simulate(m, 3)
    for a, b in zip(data.Y, again.Y):
        assert np.array_equal(a, b)


def test_simulate_clt():
    m = LinearBiasModel(np.ones(2), np.array([0.7, -0.2]), 1.5, np.eye(2), (100_000, 100_000))
    data = simulate(m, 0)
    for s in range(2):
        resid = data.Y[s] - data.X[s] @ m.beta_star
        assert abs(resid.mean() - m.b_star[s]) < 4 * 1.5 / np.sqrt(100_000)


def test_fit_recovers_noiseless():
    m = small_model(sigma=1e-12)
    fit = fit_ls(simulate(m, 1))
    np.testing.assert_allclose(fit.beta_hat, m.beta_star, atol=1e-8)
    np.testing.assert_allclose(fit.b_hat, m.b_star, atol=1e-8)


def test_fit_intercept_only():
    y = [np.array([1.0, 2.0, 6.0]), np.array([-1.0, 1.0])]
    data = GroupedData([np.empty((3, 0)), np.empty((2, 0))], y)
    fit = fit_ls(data)
    assert fit.beta_hat.size == 0
    np.testing.assert_allclose(fit.b_hat, [3.0, 0.0], atol=1e-12)


def test_fit_residuals_orthogonal():
    m = small_model()
    data = simulate(m, 5)
    fit = fit_ls(data)
    resid = [y - x @ fit.beta_hat - fit.b_hat[s] for s, (x, y) in enumerate(zip(data.X, data.Y))]
    design = np.vstack(data.X)
    np.testing.assert_allclose(design.T @ np.concatenate(resid), 0, atol=1e-8)
    for r in resid:
        assert abs(r.sum()) < 1e-8


def test_fit_proportional_weights_equal_pooled_ls():
    data = simulate(small_model(), 9)
    fit = fit_ls(data)
    k = len(data.X)
    design = np.vstack([np.hstack([x, np.tile(np.eye(k)[s], (len(x), 1))])
                        for s, x in enumerate(data.X)])
    coef, *_ = np.linalg.lstsq(design, np.concatenate(data.Y), rcond=None)
    np.testing.assert_allclose(np.concatenate([fit.beta_hat, fit.b_hat]), coef, atol=1e-10)


def test_fit_rank_deficiency_named():
    x = np.zeros((4, 1))
    data = GroupedData([x, x], [np.arange(4.0), np.arange(4.0)])
    with pytest.raises(SingularDesignError, match="feature"):
        fit_ls(data)
    # a constant feature duplicates the sum of the group indicators
    x = np.ones((4, 1))
    with pytest.raises(SingularDesignError, match="rank deficient"):
        fit_ls(GroupedData([x, x], [np.arange(4.0), np.arange(4.0)]))


def test_predict_tau_examples():
    fit = LinearFit(np.array([2.0]), np.array([1.0, -1.0]))
    w = [0.5, 0.5]
    assert predict_tau(fit, w, 1.0, [1.0], 0) == pytest.approx(3.0)
    assert predict_tau(fit, w, 0.0, [1.0], 0) == pytest.approx(2.0)
    assert predict_tau(fit, w, 0.25, [0.0], 0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        predict_tau(fit, w, 1.5, [0.0], 0)


def test_unfairness_closed_form_examples():
    fit = LinearFit(np.zeros(1), np.array([1.0, -1.0]))
    assert unfairness_closed_form(fit, [0.5, 0.5], 1.0) == pytest.approx(1.0)
    assert unfairness_closed_form(fit, [0.5, 0.5], 0.5) == pytest.approx(0.5)
    const = LinearFit(np.zeros(1), np.array([2.0, 2.0]))
    assert unfairness_closed_form(const, [0.3, 0.7], 0.8) == 0.0


def test_unfairness_closed_form_matches_gaussian_laws():
    m = small_model()
    fit = fit_ls(simulate(m, 2))
    w = m.weights
    sd = float(np.sqrt(fit.beta_hat @ m.covariance @ fit.beta_hat))
    for tau in (0.0, 0.3, 1.0):
        laws = [Gaussian(c, sd) for c in intercepts_tau(fit, w, tau)]
        assert unfairness_closed_form(fit, w, tau) == pytest.approx(unfairness(laws, w), abs=1e-6)


def test_population_risk_at_truth_is_zero():
    m = small_model()
    fit = LinearFit(m.beta_star.copy(), m.b_star.copy())
    assert population_risk(fit, m, 1.0) == pytest.approx(0.0, abs=1e-15)
    # tau = 0 at the truth pays exactly U(f*)
    assert population_risk(fit, m, 0.0) == pytest.approx(m.unfairness())


def test_delta_n_examples():
    assert delta_n(RateConfig(10, 5, 1000)) == pytest.approx(0.12)
    assert delta_n(RateConfig(10, 5, 1000, simplified=True)) == pytest.approx(0.015)
    assert delta_n(RateConfig(3, 2, 77)) == pytest.approx(8 * delta_n(RateConfig(3, 2, 77, 0, True)))


def test_tau_hat_examples():
    fit = LinearFit(np.zeros(1), np.array([2.0, -2.0]))  # U(f_1) = 4
    w = [0.5, 0.5]
    cfg = RateConfig(1, 1, 1, simplified=True)              # delta = 2
    assert tau_hat(fit, w, 0.5, 1 / np.sqrt(2), cfg) == pytest.approx(0.125)
    # U(f_1) = 4 <= sigma^2 * delta = 200
    assert tau_hat(fit, w, 0.5, 10.0, cfg) == 0.0


def test_tau_hat_without_correction_returns_alpha(monkeypatch):
    import riskfair.linear_bias as lb
    monkeypatch.setattr(lb, "delta_n", lambda cfg: 0.0)
    fit = LinearFit(np.zeros(1), np.array([1.0, -1.0]))
    assert lb.tau_hat(fit, [0.5, 0.5], 0.7, 1.0, RateConfig(1, 1, 10)) == pytest.approx(0.7)


def test_sample_size_check():
    cfg = RateConfig(10, 5, 1)
    assert theta(cfg) == pytest.approx((4 * np.sqrt(5) + 6 * np.sqrt(10)) / np.sqrt(10))
    assert theta(cfg) == pytest.approx(8.828, abs=1e-3)
    thr = sample_size_threshold(cfg)
    assert not sample_size_check(cfg)
    assert sample_size_check(RateConfig(10, 5, int(np.ceil(thr)) + 1))
    assert not sample_size_check(RateConfig(10, 5, int(np.floor(thr)) - 1))
    # sufficient condition
    n = int(max(256 * 5, 12.5 ** 2 * 10)) + 1
    assert sample_size_check(RateConfig(10, 5, n))


def test_noise_to_unfairness_bias():
    w = np.array([0.5, 0.5])
    np.testing.assert_allclose(noise_to_unfairness_bias([1, -1], w, 1.0, 1.0), [1, -1])
    b = noise_to_unfairness_bias([1, -1], w, 1.0, 0.5)
    np.testing.assert_allclose(b, [2, -2])
    assert unfairness_closed_form(LinearFit(np.zeros(1), b), w, 1.0) == pytest.approx(4.0)
    b2 = noise_to_unfairness_bias([1, -1], w, 2.0, 0.5)
    assert np.linalg.norm(b2) == pytest.approx(2 * np.linalg.norm(b))
    with pytest.raises(ValueError):
        noise_to_unfairness_bias([1, 1], w, 1.0, 1.0)


def test_simulation_properties():
    proto = SimulationProtocol(repetitions=5, alphas=(0.0, 0.5, 1.0))
    s = run_simulation_study(proto)
    assert np.all(s.unfairness[:, 0] == 0.0)
    assert np.all(s.tau <= s.alphas[None, :])
    naive = run_simulation_study(SimulationProtocol(repetitions=5, alphas=(0.0, 0.5, 1.0),
                                                    tau_rule="naive"))
    assert np.all(naive.unfairness[:, 0] == 0.0)


def test_simulation_naive_noiseless_matches_oracle():
    proto = SimulationProtocol(sigma=1e-9, nur=1e-9 / 2, repetitions=2,
                               alphas=tuple(np.linspace(0, 1, 5)), tau_rule="naive")
    s = run_simulation_study(proto)
    np.testing.assert_allclose(s.mean_risk, s.oracle_risk, rtol=1e-6, atol=1e-12)


def test_simulation_deterministic_and_rep_independent():
    a = run_simulation_study(SimulationProtocol(repetitions=3, seed=4))
    b = run_simulation_study(SimulationProtocol(repetitions=5, seed=4))
    np.testing.assert_array_equal(a.risk, b.risk[:3])


def test_risk_decreases_with_n():
    risks = []
    for n in (250, 1000, 4000):
        sizes = (n // 5,) * 5
        proto = SimulationProtocol(group_sizes=sizes, repetitions=30, alphas=(0.5,))
        risks.append(run_simulation_study(proto).mean_risk[0])
    assert risks[0] > risks[1] > risks[2]
