import numpy as np
import pytest
from scipy import stats

from trajlse import (GLMMap, LinearMap, PointInit, ScaledTanh, SystemSpec,
                     Tabulated1D, UniformBallInit, ZeroMap, contraction_estimate,
                     counterfactual_points, make_random_glm_system,
                     make_random_rkhs_system, sample_counterfactual, simulate)


def scalar_spec(truth, sigma=0.1, B=1.0, **kw):
    return SystemSpec(kind="autoregressive", truth=truth, d_x=1, d_y=1,
                      noise_sigma=sigma, state_bound=B, **kw)


def test_noiseless_fixed_point():
    spec = scalar_spec(ZeroMap(1, 1), sigma=0.0)
    traj = simulate(spec, 10, seed=0)
    assert np.all(traj.states == 0.0)
    assert np.all(traj.outputs == 0.0)


def test_geometric_contraction():
    spec = scalar_spec(LinearMap([[0.5]]), sigma=0.0, init=PointInit((1.0,)))
    traj = simulate(spec, 4, seed=0)
    assert np.allclose(traj.states[:, 0], [1.0, 0.5, 0.25, 0.125])


def test_determinism_rkhs_spec():
    spec = make_random_rkhs_system(5, 200, 0.9, seed=11, burn_in=20)
    a = simulate(spec, 50, seed=3)
    b = simulate(spec, 50, seed=3)
    assert a.states.tobytes() == b.states.tobytes()
    assert a.outputs.tobytes() == b.outputs.tobytes()
    assert a.noises.tobytes() == b.noises.tobytes()


def test_output_identity_and_noise_truncation():
    spec = scalar_spec(ScaledTanh(0.7), sigma=0.3)
    traj = simulate(spec, 500, seed=1)
    assert np.allclose(traj.outputs, 0.7 * np.tanh(traj.states) + traj.noises,
                       atol=1e-15)
    assert np.linalg.norm(traj.noises, axis=1).max() <= spec.noise_radius


def test_state_boundedness_long_run():
    spec = scalar_spec(LinearMap([[0.95]]), sigma=0.5, B=0.8)
    traj = simulate(spec, 10_000, seed=2)
    assert np.linalg.norm(traj.states, axis=1).max() <= 0.8 + 1e-12


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        scalar_spec(ZeroMap(1, 1), sigma=-0.1)
    with pytest.raises(ValueError):
        scalar_spec(ZeroMap(1, 1), B=0.0)
    with pytest.raises(ValueError):
        SystemSpec(kind="autoregressive", truth=ZeroMap(2, 1), d_x=2, d_y=1,
                   noise_sigma=0.1, state_bound=1.0)


def test_burn_in_discards_prefix():
    spec0 = scalar_spec(ScaledTanh(0.5), sigma=0.2, burn_in=0)
    spec5 = scalar_spec(ScaledTanh(0.5), sigma=0.2, burn_in=5)
    a = simulate(spec0, 20, seed=9)
    b = simulate(spec5, 15, seed=9)
    # same noise stream: the burn-in run reproduces the tail of the plain run
    assert np.allclose(a.states[5:], b.states)


def test_coupling_contraction_with_projection():
    # identical noise streams, different initial states
    rho = 0.7
    base = dict(kind="autoregressive", truth=ScaledTanh(rho), d_x=1, d_y=1,
                noise_sigma=0.2, state_bound=1.0)
    a = simulate(SystemSpec(init=PointInit((0.9,)), **base), 60, seed=4)
    b = simulate(SystemSpec(init=PointInit((-0.9,)), **base), 60, seed=4)
    assert np.array_equal(a.noises, b.noises)
    gap0 = abs(a.states[0, 0] - b.states[0, 0])
    for t in range(60):
        gap = abs(a.states[t, 0] - b.states[t, 0])
        assert gap <= rho**t * gap0 + 1e-12


def test_sample_counterfactual_contract():
    spec = scalar_spec(ScaledTanh(0.7))
    pairs = sample_counterfactual(spec, 5, 7, seed=0)
    assert len(pairs) == 7
    for traj, tau in pairs:
        assert traj.horizon == 5
        assert 0 <= tau < 5
    # T = 1 forces tau = 0
    assert all(tau == 0 for _, tau in sample_counterfactual(spec, 1, 5, seed=0))


def test_counterfactual_points_match_pairs():
    spec = scalar_spec(ScaledTanh(0.7))
    pairs = sample_counterfactual(spec, 9, 6, seed=5)
    pts = counterfactual_points(spec, 9, 6, seed=5)
    manual = np.stack([traj.states[tau] for traj, tau in pairs])
    assert np.array_equal(pts, manual)


def test_fresh_draws_independent_of_training_stream():
    spec = scalar_spec(ScaledTanh(0.7))
    train = simulate(spec, 64, seed=12)
    pts = counterfactual_points(spec, 64, 4, seed=12)
    again = counterfactual_points(spec, 64, 4, seed=12)
    assert np.array_equal(pts, again)
    assert not np.allclose(train.states[:4, 0], pts[:, 0])


def test_tau_uniformity_chi_square():
    # chi-square goodness of fit at the 1% level over 1e5 draws
    spec = scalar_spec(ZeroMap(1, 1), sigma=0.3)
    T = 16
    from trajlse import substream

    taus = substream(123, "tau").integers(0, T, size=100_000)
    counts = np.bincount(taus, minlength=T)
    _, pvalue = stats.chisquare(counts)
    assert pvalue > 0.01


def test_make_random_rkhs_system_paper_family():
    spec = make_random_rkhs_system(5, 10_000, 0.9, seed=0)
    assert spec.truth.centers.shape == (10_000, 5)
    assert spec.truth.weights.shape == (10_000, 5)
    assert np.linalg.norm(spec.truth.weights, 2) == pytest.approx(0.9)
    assert spec.burn_in == 1000


def test_rkhs_zero_scaling():
    spec = make_random_rkhs_system(3, 50, 0.0, seed=0)
    x = np.random.default_rng(0).standard_normal((10, 3))
    assert np.allclose(spec.truth(x), 0.0)


def test_rkhs_empirical_lipschitz_below_rho():
    # pairwise ratio maximization oracle over 1e4 sampled pairs
    rho = 0.9
    spec = make_random_rkhs_system(3, 500, rho, seed=7)
    rng = np.random.default_rng(1)
    x = rng.uniform(-3, 3, (10_000, 3))
    z = x + rng.standard_normal((10_000, 3)) * rng.uniform(0.01, 2.0, (10_000, 1))
    num = np.linalg.norm(spec.truth(x) - spec.truth(z), axis=1)
    den = np.linalg.norm(x - z, axis=1)
    assert (num / den).max() <= rho


def test_contraction_estimate_linear_exact():
    est = contraction_estimate(LinearMap([[0.5]]), bound=1.0, n_pairs=200, seed=0)
    assert est == pytest.approx(0.5, abs=1e-12)


def test_contraction_estimate_constant_zero():
    est = contraction_estimate(Tabulated1D([-1, 1], [0.3, 0.3]), bound=1.0,
                               n_pairs=100, seed=0)
    assert est == 0.0


def test_contraction_estimate_glm_vs_power_iteration():
    spec = make_random_glm_system(3, 0.8, seed=3)
    A = spec.truth.matrix
    # power-iteration oracle for the operator norm
    v = np.ones(3) / np.sqrt(3)
    for _ in range(200):
        v = A.T @ (A @ v)
        v /= np.linalg.norm(v)
    op_norm = np.linalg.norm(A @ v)
    assert op_norm == pytest.approx(0.8, rel=1e-8)
    est = contraction_estimate(spec.truth, bound=1.0, n_pairs=5000, seed=1)
    assert est <= op_norm + 1e-12


def test_time_series_kind_iid_covariates():
    spec = SystemSpec(kind="time-series", truth=ScaledTanh(0.5, d=1), d_x=1, d_y=1,
                      noise_sigma=0.1, state_bound=1.0, init=UniformBallInit())
    traj = simulate(spec, 300, seed=0)
    assert np.allclose(traj.outputs, 0.5 * np.tanh(traj.states) + traj.noises)
    # i.i.d. covariates: lag-1 autocorrelation near zero
    x = traj.states[:, 0]
    r = np.corrcoef(x[:-1], x[1:])[0, 1]
    assert abs(r) < 0.15
