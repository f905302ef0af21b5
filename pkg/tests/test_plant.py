import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_stable_model
from r2rlearn.errors import ConfigurationError
from r2rlearn.lti import simulate_nominal
from r2rlearn.plant import PerturbationSpec, TruePlant, noise_samples, run_iteration


@pytest.fixture
def model(rng):
    return random_stable_model(rng, 4, 2, 2)


def ideal_plant(model, **kw):
    return TruePlant(model, np.eye(2), PerturbationSpec(), [0.0, 0.0], **kw)


def test_mismatch_free_equals_nominal(model, rng):
    u = rng.normal(size=(40, 2))
    y = run_iteration(ideal_plant(model), u, model)
    np.testing.assert_array_equal(y, simulate_nominal(model, u)[1])


def test_zero_input(model):
    assert not np.any(run_iteration(ideal_plant(model), np.zeros((10, 2)), model))


def test_same_offset_bit_identical(model, rng):
    p = TruePlant(model, np.eye(2), PerturbationSpec(), [0.01, 0.02], rng_seed=99)
    u = rng.normal(size=(50, 2))
    a = run_iteration(p, u, model, seed_offset=3)
    b = run_iteration(p, u, model, seed_offset=3)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, run_iteration(p, u, model, seed_offset=4))


def test_repeatable_noise_ignores_offset(model, rng):
    p = TruePlant(model, np.eye(2), PerturbationSpec(), [0.01, 0.01], rng_seed=5, repeatable_noise=True)
    u = rng.normal(size=(20, 2))
    np.testing.assert_array_equal(run_iteration(p, u, model, 0), run_iteration(p, u, model, 7))


def test_empirical_noise_std(model):
    std = np.array([0.001, 0.003])
    p = TruePlant(model, np.eye(2), PerturbationSpec(), std, rng_seed=1)
    u = np.zeros((10_000, 2))
    y = run_iteration(p, u, model)
    got = np.std(y, axis=0, ddof=1)
    assert np.all(np.abs(got / std - 1) < 0.05)


def test_noise_stream_prefix_stable(model):
    # noise at (offset, t) does not depend on the run length
    p = TruePlant(model, np.eye(2), PerturbationSpec(), [1.0, 1.0], rng_seed=3)
    np.testing.assert_array_equal(noise_samples(p, 2, 10), noise_samples(p, 2, 30)[:10])


def test_affine_offset_is_additive(model, rng):
    c = np.array([0.3, -0.2])
    pert = PerturbationSpec("affine-output", {"gain": np.zeros((2, 6)), "offset": c})
    p = TruePlant(model, np.eye(2), pert, 0.0)
    u = rng.normal(size=(15, 2))
    np.testing.assert_allclose(run_iteration(p, u, model) - simulate_nominal(model, u)[1], np.tile(c, (15, 1)),
                               atol=1e-14)


@given(seed=st.integers(0, 2**31))
def test_g_additivity_exact(seed):
    rng = np.random.default_rng(seed)
    model = random_stable_model(rng, 4, 2, 2)
    truth = random_stable_model(rng, 5, 2, 2)
    pert = PerturbationSpec("smooth-nonlinear", {
        "amplitude": rng.uniform(0.1, 1, 2), "frequency": rng.uniform(0.5, 3, 2),
        "weights": rng.normal(size=(2, 6)),
    })
    sel = rng.normal(size=(2, 2))
    u = rng.normal(size=(25, 2))
    with_g = run_iteration(TruePlant(truth, sel, pert, 0.0), u, model)
    without = run_iteration(TruePlant(truth, sel, PerturbationSpec(), 0.0), u, model)
    x, _ = simulate_nominal(model, u)
    g = pert.evaluate(x[:-1], u, 2)
    assert np.array_equal(with_g - without, g) or np.max(np.abs(with_g - without - g)) <= 1e-15 * (
        1 + np.max(np.abs(without)))


@given(X=st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=6))
def test_g_finite(X):
    pert = PerturbationSpec("smooth-nonlinear", {"amplitude": [1, 2], "frequency": [3, 4],
                                                 "weights": np.ones((2, 6))})
    z = np.array(X)
    assert np.all(np.isfinite(pert.evaluate(z[None, :4], z[None, 4:], 2)))


def test_validation(model):
    with pytest.raises(ConfigurationError):
        PerturbationSpec("quadratic")
    with pytest.raises(ConfigurationError):
        PerturbationSpec("affine-output", {"gain": np.zeros((2, 6))})
    with pytest.raises(ConfigurationError):
        TruePlant(model, np.eye(2), PerturbationSpec(), [-1.0, 0.0])
    with pytest.raises(ConfigurationError):
        TruePlant(model, np.eye(3), PerturbationSpec(), 0.0)
    with pytest.raises(ConfigurationError):
        run_iteration(ideal_plant(model), np.zeros((5, 3)), model)


def test_perturbation_dict_roundtrip():
    p = PerturbationSpec("affine-output", {"gain": np.ones((2, 6)), "offset": [1.0, 2.0]})
    assert PerturbationSpec.from_dict(p.to_dict()) == p
