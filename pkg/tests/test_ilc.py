import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_stable_model
from r2rlearn.errors import ConfigurationError
from r2rlearn.ilc import IlcWeights, contraction_ratio, fixed_point, norm_optimal_update
from r2rlearn.lti import LiftedSystem, StateSpaceModel, build_lifted

SCALAR = LiftedSystem(np.array([[1.0]]), np.array([[0.0]]), 1)
UNIT = IlcWeights(np.eye(1), np.eye(1), np.eye(1), SCALAR.H)


def random_spd(rng, n, lo=0.05, hi=2.0):
    Qm, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (Qm * rng.uniform(lo, hi, n)) @ Qm.T


def test_scalar_arithmetic():
    assert norm_optimal_update([0.0], [1.0], SCALAR, UNIT)[0] == pytest.approx(1 / 3, abs=1e-15)
    assert norm_optimal_update([1.0], [0.0], SCALAR, UNIT)[0] == pytest.approx(2 / 3, abs=1e-15)


def test_zero_error_vanishing_effort(rng):
    L = build_lifted(random_stable_model(rng, 3), 20)
    w = IlcWeights.from_scalars(L, 1.0, 1e-2, 1e-12)
    u = rng.normal(size=20)
    np.testing.assert_allclose(norm_optimal_update(u, np.zeros(20), L, w), u, atol=1e-9)


def test_W_definition(rng):
    L = build_lifted(random_stable_model(rng, 2), 10)
    Q, R, S = (random_spd(rng, 10) for _ in range(3))
    w = IlcWeights(Q, R, S, L.H)
    np.testing.assert_allclose(w.W, L.H.T @ Q @ L.H + R + S, atol=1e-12)


def test_invalid_weights(rng):
    L = build_lifted(random_stable_model(rng, 2), 4)
    with pytest.raises(ConfigurationError):
        IlcWeights.from_scalars(L, 1.0, 0.0, 1e-3)
    with pytest.raises(ConfigurationError):
        IlcWeights(np.triu(np.ones((4, 4))), np.eye(4), np.eye(4), L.H)
    with pytest.raises(ConfigurationError):
        norm_optimal_update(np.zeros(3), np.zeros(4), L, IlcWeights.from_scalars(L))


@given(seed=st.integers(0, 2**31))
def test_fixed_point_consistency(seed):
    rng = np.random.default_rng(seed)
    L = build_lifted(random_stable_model(rng, 3), 12)
    w = IlcWeights(random_spd(rng, 12), random_spd(rng, 12), random_spd(rng, 12), L.H)
    e = rng.normal(size=12)
    # choose u so that H^T Q e = S u holds, then v = u
    u = np.linalg.solve(w.S, L.H.T @ w.Q @ e)
    np.testing.assert_allclose(norm_optimal_update(u, e, L, w), u, atol=1e-9 * (1 + np.abs(u).max()))
    e2 = e + rng.normal(size=12)
    assert not np.allclose(norm_optimal_update(u, e2, L, w), u)


@given(seed=st.integers(0, 2**31))
def test_variational_equivalence(seed):
    rng = np.random.default_rng(seed)
    L = build_lifted(random_stable_model(rng, 3), 15)
    w = IlcWeights(random_spd(rng, 15), random_spd(rng, 15), random_spd(rng, 15), L.H)
    u, e = rng.normal(size=(2, 15))
    v = norm_optimal_update(u, e, L, w)
    H = L.H
    grad = -2 * H.T @ w.Q @ (e - H @ (v - u)) + 2 * w.R @ (v - u) + 2 * w.S @ v
    assert np.max(np.abs(grad)) <= 1e-8 * max(1.0, np.max(np.abs(H.T @ w.Q @ e)))


def test_contraction_on_random_spd_weights():
    rng = np.random.default_rng(11)
    for _ in range(10):
        L = build_lifted(random_stable_model(rng, 3), 20)
        w = IlcWeights(random_spd(rng, 20), random_spd(rng, 20), random_spd(rng, 20), L.H)
        rho = contraction_ratio(w)
        assert rho < 1
        r = rng.normal(size=20)
        u_inf = fixed_point(L, w, r)
        u = np.zeros(20)
        for _ in range(5):
            u_next = norm_optimal_update(u, r - L.H @ u, L, w)
            assert np.linalg.norm(u_next - u_inf) <= rho * np.linalg.norm(u - u_inf) * (1 + 1e-9) + 1e-12
            u = u_next


def test_iterates_reach_closed_form_fixed_point():
    rng = np.random.default_rng(3)
    m = random_stable_model(rng, 4, 2, 2)
    L = build_lifted(m, 25)
    w = IlcWeights.from_scalars(L, 1.0, 0.1, 0.05)
    r = rng.normal(size=50)
    H = L.H
    u_inf = np.linalg.solve(H.T @ H + 0.05 * np.eye(50), H.T @ r)   # independent oracle
    u = np.zeros(50)
    dist = [np.linalg.norm(u - u_inf)]
    for _ in range(200):
        u = norm_optimal_update(u, r - H @ u, L, w)
        dist.append(np.linalg.norm(u - u_inf))
        if dist[-1] <= 1e-8:
            break
    assert dist[-1] <= 1e-8
    assert all(b <= a + 1e-15 for a, b in zip(dist, dist[1:]))
    np.testing.assert_allclose(fixed_point(L, w, r), u_inf, atol=1e-10)


def test_integrator_fixed_point_with_tiny_effort():
    m = StateSpaceModel([[1.0]], [[1.0]], [[1.0]])
    L = build_lifted(m, 10)
    w = IlcWeights.from_scalars(L)
    r = np.linspace(0.1, 1.0, 10)
    np.testing.assert_allclose(L.H @ fixed_point(L, w, r), r, atol=1e-4)
