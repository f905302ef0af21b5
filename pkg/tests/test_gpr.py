import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from r2rlearn.errors import ConfigurationError
from r2rlearn.gpr import (
    ChannelHyperparams, ConditionedGP, GpHyperparams, MismatchDataset, build_dataset,
    default_channel_hyperparams, fit_hyperparams, kernel_se, log_marginal_likelihood,
    nearest_path_index, posterior, window,
)
from r2rlearn.lti import StateSpaceModel


def ch(sn=0.1, sf=1.0, ls=(1.0, 1.0)):
    return ChannelHyperparams(sn, sf, np.array(ls, dtype=float))


def dense_posterior(Zq, Z, y, c):
    """Textbook formulas with an explicit inverse (test oracle only)."""
    def k(A, B):
        d = (A[:, None, :] - B[None, :, :]) / c.lengthscales
        return c.signal_std**2 * np.exp(-0.5 * np.sum(d * d, axis=2))
    Kinv = np.linalg.inv(k(Z, Z) + c.noise_std**2 * np.eye(len(Z)))
    Kq = k(Zq, Z)
    return Kq @ Kinv @ y, c.signal_std**2 - np.einsum("ij,jk,ik->i", Kq, Kinv, Kq)


def dense_lml(Z, y, c):
    d = (Z[:, None, :] - Z[None, :, :]) / c.lengthscales
    K = c.signal_std**2 * np.exp(-0.5 * np.sum(d * d, axis=2)) + c.noise_std**2 * np.eye(len(Z))
    _, logdet = np.linalg.slogdet(K)
    return -0.5 * y @ np.linalg.solve(K, y) - 0.5 * logdet - 0.5 * len(y) * math.log(2 * math.pi)


def random_case(rng, n_g, nz=3):
    Z = rng.uniform(-2, 2, size=(n_g, nz))
    Delta = rng.normal(size=(n_g, 2))
    hp = GpHyperparams(tuple(
        ChannelHyperparams(rng.uniform(0.05, 0.5), rng.uniform(0.5, 2), rng.uniform(0.5, 2, nz)) for _ in range(2)
    ))
    return MismatchDataset(Z, Delta), hp


# kernel -------------------------------------------------------------------

def test_kernel_zero_distance():
    assert kernel_se(np.zeros(2), np.zeros(2), ch(sf=1.7)) == pytest.approx(1.7**2, rel=1e-15)


def test_kernel_formula():
    assert kernel_se(np.zeros(2), np.array([1.0, 1.0]), ch()) == pytest.approx(math.exp(-1), rel=1e-14)


def test_kernel_decay():
    assert kernel_se(np.zeros(2), np.array([20.0, 0.0]), ch()) < 1e-80


def test_nonpositive_hyperparameters():
    with pytest.raises(ConfigurationError):
        ChannelHyperparams(0.0, 1.0, [1.0])
    with pytest.raises(ConfigurationError):
        ChannelHyperparams(0.1, 1.0, [1.0, -1.0])


# posterior ----------------------------------------------------------------

def test_empty_dataset_gives_prior():
    hp = GpHyperparams((ch(sf=2.0), ch(sf=0.5)))
    mean, var = posterior(np.zeros(2), MismatchDataset.empty(2, 2), hp)
    np.testing.assert_array_equal(mean, 0.0)
    np.testing.assert_allclose(var, [4.0, 0.25])


def test_single_point_closed_form():
    sf, sn, d0 = 1.3, 0.4, 0.7
    hp = GpHyperparams((ch(sn, sf),))
    D = MismatchDataset([[0.2, -0.1]], [[d0]])
    mean, var = posterior(np.array([0.2, -0.1]), D, hp)
    s2, n2 = sf**2, sn**2
    assert mean[0] == pytest.approx(s2 / (s2 + n2) * d0, rel=1e-12)
    assert var[0] == pytest.approx(s2 - s2 * s2 / (s2 + n2), rel=1e-10)


def test_far_query_reverts_to_prior(rng):
    D, hp = random_case(rng, 30, nz=2)
    hp = GpHyperparams((ch(0.1, 1.5), ch(0.2, 0.7)))
    mean, var = posterior(np.array([40.0, 40.0]), D, hp)
    assert np.all(np.abs(mean) < 1e-6 * np.linalg.norm(D.Delta))
    np.testing.assert_allclose(var, [1.5**2, 0.7**2], rtol=1e-6)


@given(seed=st.integers(0, 2**31), n_g=st.integers(1, 50))
def test_posterior_matches_dense_oracle(seed, n_g):
    rng = np.random.default_rng(seed)
    D, hp = random_case(rng, n_g)
    Zq = rng.uniform(-3, 3, size=(7, 3))
    mean, var = ConditionedGP(D, hp).predict(Zq)
    for m in range(2):
        mo, vo = dense_posterior(Zq, D.Z, D.Delta[:, m], hp[m])
        assert np.max(np.abs(mean[:, m] - mo)) <= 1e-8
        assert np.max(np.abs(var[:, m] - np.maximum(vo, 0))) <= 1e-8


@given(seed=st.integers(0, 2**31), n_g=st.integers(1, 30))
def test_interpolation_with_tiny_noise(seed, n_g):
    rng = np.random.default_rng(seed)
    Z = rng.uniform(-2, 2, size=(n_g, 2))
    Z = Z[np.unique(np.round(Z, 1), axis=0, return_index=True)[1]]   # keep points distinguishable
    y = rng.normal(size=(len(Z), 1))
    hp = GpHyperparams((ch(1e-6 * 0.5, 0.5, (0.3, 0.3)),))
    mean, _ = ConditionedGP(MismatchDataset(Z, y), hp).predict(Z)
    assert np.max(np.abs(mean[:, 0] - y[:, 0])) <= 1e-3 * (np.max(np.abs(y)) + 1)


@given(seed=st.integers(0, 2**31), n_g=st.integers(0, 30))
def test_variance_bounds(seed, n_g):
    rng = np.random.default_rng(seed)
    D, hp = random_case(rng, n_g)
    _, var = ConditionedGP(D, hp).predict(rng.uniform(-3, 3, size=(10, 3)))
    assert np.all(var >= 0)
    assert np.all(var <= np.array([c.signal_std**2 for c in hp.channels]) * (1 + 1e-12))


@given(seed=st.integers(0, 2**31), n_g=st.integers(0, 40))
def test_variance_monotone_under_augmentation(seed, n_g):
    rng = np.random.default_rng(seed)
    D, hp = random_case(rng, n_g + 1)
    small = MismatchDataset(D.Z[:n_g], D.Delta[:n_g])
    Zq = np.vstack([rng.uniform(-3, 3, size=(10, 3)), D.Z])
    _, v_small = ConditionedGP(small, hp).predict(Zq)
    _, v_big = ConditionedGP(D, hp).predict(Zq)
    assert np.all(v_big <= v_small + 1e-9)


def test_predict_gradients_match_finite_differences(rng):
    D, hp = random_case(rng, 25)
    gp = ConditionedGP(D, hp)
    z = rng.uniform(-1, 1, size=3)
    _, _, dm, dv = gp.predict(z, grad=True)
    h = 1e-6
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        mp, vp = gp.predict(z + e)
        mm, vm = gp.predict(z - e)
        np.testing.assert_allclose(dm[0, :, i], (mp - mm)[0] / (2 * h), rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(dv[0, :, i], (vp - vm)[0] / (2 * h), rtol=1e-5, atol=1e-8)


# marginal likelihood -------------------------------------------------------

def test_lml_single_point():
    sf, sn, y0 = 0.8, 0.3, 1.1
    D = MismatchDataset([[0.5]], [[y0]])
    c = ChannelHyperparams(sn, sf, [1.0])
    s = sf**2 + sn**2
    assert log_marginal_likelihood(D, c) == pytest.approx(-0.5 * y0**2 / s - 0.5 * math.log(2 * math.pi * s),
                                                          rel=1e-12)


def test_lml_fit_term_increases_as_data_shrinks(rng):
    D, hp = random_case(rng, 20)
    vals = [log_marginal_likelihood(MismatchDataset(D.Z, a * D.Delta), hp, 0) for a in (1.0, 0.5, 0.1, 0.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@given(seed=st.integers(0, 2**31), n_g=st.integers(2, 40))
def test_lml_matches_dense_and_gradient_matches_fd(seed, n_g):
    rng = np.random.default_rng(seed)
    D, hp = random_case(rng, n_g)
    for m in range(2):
        val, g = log_marginal_likelihood(D, hp, m, grad=True)
        assert val == pytest.approx(dense_lml(D.Z, D.Delta[:, m], hp[m]), rel=1e-9, abs=1e-9)
        th = hp[m].to_log()
        fd = np.empty_like(th)
        h = 1e-5
        for i in range(th.size):
            e = np.zeros_like(th)
            e[i] = h
            lp = dense_lml(D.Z, D.Delta[:, m], ChannelHyperparams.from_log(th + e))
            lm = dense_lml(D.Z, D.Delta[:, m], ChannelHyperparams.from_log(th - e))
            fd[i] = (lp - lm) / (2 * h)
        assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


# fitting ------------------------------------------------------------------

def sample_se_gp(rng, n, sf, sn, ls):
    Z = rng.uniform(0, 6, size=(n, len(ls)))
    d = (Z[:, None, :] - Z[None, :, :]) / np.asarray(ls)
    K = sf**2 * np.exp(-0.5 * np.sum(d * d, axis=2)) + 1e-10 * np.eye(n)
    f = np.linalg.cholesky(K) @ rng.normal(size=n)
    return Z, f + sn * rng.normal(size=n)


def test_fit_recovers_known_gp():
    rng = np.random.default_rng(7)
    Z, y = sample_se_gp(rng, 200, 1.0, 0.05, (1.0, 1.5))
    hp = fit_hyperparams(MismatchDataset(Z, y[:, None]), n_starts=4, seed=0)
    c = hp[0]
    assert 1 / 1.5 <= c.signal_std <= 1.5
    assert 0.05 / 2 <= c.noise_std <= 0.05 * 2


def test_fit_pure_noise_has_small_signal():
    rng = np.random.default_rng(8)
    Z = rng.uniform(0, 6, size=(200, 2))
    y = 0.1 * rng.normal(size=(200, 1))
    c = fit_hyperparams(MismatchDataset(Z, y), n_starts=4, seed=0)[0]
    assert c.signal_std < c.noise_std


def test_fit_ascent_contract(rng):
    D, _ = random_case(rng, 40)
    hp = fit_hyperparams(D, n_starts=3, seed=1)
    for m in range(2):
        init = default_channel_hyperparams(D.Z, D.Delta[:, m])
        assert log_marginal_likelihood(D, hp, m) >= log_marginal_likelihood(D, init) - 1e-9


def test_more_starts_never_worse(rng):
    D, _ = random_case(rng, 40)
    one = fit_hyperparams(D, n_starts=1, seed=2)
    many = fit_hyperparams(D, n_starts=6, seed=2)
    for m in range(2):
        assert log_marginal_likelihood(D, many, m) >= log_marginal_likelihood(D, one, m) - 1e-9


def test_fit_zero_data_warns_and_uses_defaults(caplog):
    D = MismatchDataset(np.arange(20.0).reshape(10, 2), np.zeros((10, 1)))
    with caplog.at_level("WARNING"):
        hp = fit_hyperparams(D)
    assert "identically zero" in caplog.text
    ref = default_channel_hyperparams(D.Z, D.Delta[:, 0])
    np.testing.assert_array_equal(hp[0].to_log(), ref.to_log())


def test_fit_needs_data():
    with pytest.raises(ConfigurationError):
        fit_hyperparams(MismatchDataset(np.zeros((3, 2)), np.ones((3, 1))))


# dataset construction and windowing ----------------------------------------

INTEGRATOR = StateSpaceModel([[1.0]], [[1.0]], [[1.0]])


def test_dataset_hand_evaluation():
    D = build_dataset([[1.0]], [[1.2]], INTEGRATOR)
    np.testing.assert_allclose(D.Delta, [[0.2]], atol=1e-15)
    np.testing.assert_array_equal(D.Z, [[0.0, 1.0]])


def test_dataset_mismatch_free_is_zero(rng):
    from r2rlearn.lti import simulate_nominal
    u = rng.normal(size=(12, 1))
    D = build_dataset(u, simulate_nominal(INTEGRATOR, u)[1], INTEGRATOR)
    assert not np.any(D.Delta)


def test_dataset_constant_offset(rng):
    from r2rlearn.lti import simulate_nominal
    u = rng.normal(size=(12, 1))
    D = build_dataset(u, simulate_nominal(INTEGRATOR, u)[1] + 0.25, INTEGRATOR)
    np.testing.assert_allclose(D.Delta, 0.25, atol=1e-14)


def test_dataset_length_mismatch():
    with pytest.raises(ConfigurationError):
        build_dataset(np.ones(3), np.ones(4), INTEGRATOR)
    with pytest.raises(ConfigurationError):
        build_dataset(np.ones(3), np.ones(3), INTEGRATOR, s_traj=np.ones(2))


def test_dataset_csv():
    D = MismatchDataset([[1.0, 2.0]], [[0.5]], [0.25])
    buf = io.StringIO()
    D.to_csv(buf)
    assert buf.getvalue() == "z0,z1,delta0,s_path\n1.0,2.0,0.5,0.25\n"


def ds(n):
    return MismatchDataset(np.arange(n, dtype=float)[:, None], np.zeros((n, 1)), np.linspace(0, 1, n))


def test_window_interior():
    np.testing.assert_array_equal(window(ds(10), 5, -2, 2).Z.ravel(), [3, 4, 5, 6, 7])


def test_window_clamped():
    np.testing.assert_array_equal(window(ds(10), 0, -2, 2).Z.ravel(), [0, 1, 2])


def test_window_single_and_empty():
    np.testing.assert_array_equal(window(ds(10), 4, 0, 0).Z.ravel(), [4])
    assert window(ds(10), 30, -2, 2).n_g == 0
    with pytest.raises(ConfigurationError):
        window(ds(10), 3, 2, 1)


def test_nearest_path_index():
    assert nearest_path_index(0.6, [0.0, 0.5, 1.0]) == 1
    assert nearest_path_index(1.0, [0.0, 0.5, 1.0]) == 2
    assert nearest_path_index(0.75, [0.0, 0.5, 1.0]) == 1


def test_hyperparams_dict_roundtrip(rng):
    _, hp = random_case(rng, 1)
    assert GpHyperparams.from_dict(hp.to_dict()) == hp
