import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from r2rlearn.errors import ConfigurationError
from r2rlearn.qp import INFEASIBLE, MAX_ITER, SOLVED, QpProblem, kkt_residual, solve_qp


def enumerate_kkt(P, q, lo, hi, A, b):
    """Exhaustive active-set oracle: try every free/lower/upper assignment."""
    n = q.size
    best = None
    bounded = [i for i in range(n) if np.isfinite(lo[i]) or np.isfinite(hi[i])]
    for states in itertools.product((0, -1, 1), repeat=len(bounded)):
        x_fix = {}
        ok = True
        for i, s in zip(bounded, states):
            if s == -1:
                if not np.isfinite(lo[i]):
                    ok = False
                    break
                x_fix[i] = lo[i]
            elif s == 1:
                if not np.isfinite(hi[i]):
                    ok = False
                    break
                x_fix[i] = hi[i]
        if not ok:
            continue
        fixed = np.array(sorted(x_fix), dtype=int)
        free = np.array([i for i in range(n) if i not in x_fix], dtype=int)
        xa = np.array([x_fix[i] for i in fixed])
        m = A.shape[0]
        K = np.zeros((free.size + m, free.size + m))
        K[:free.size, :free.size] = P[np.ix_(free, free)]
        K[:free.size, free.size:] = A[:, free].T
        K[free.size:, :free.size] = A[:, free]
        rhs = np.concatenate([-q[free] - (P[np.ix_(free, fixed)] @ xa if fixed.size else 0.0),
                              b - (A[:, fixed] @ xa if fixed.size else 0.0)])
        sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
        if np.linalg.norm(K @ sol - rhs) > 1e-9 * (1 + np.linalg.norm(rhs)):
            continue
        x = np.empty(n)
        x[free] = sol[:free.size]
        x[fixed] = xa
        if np.any(x < lo - 1e-10) or np.any(x > hi + 1e-10):
            continue
        nu = sol[free.size:]
        ybox = -(P @ x + q + A.T @ nu)
        if any((ybox[i] < -1e-9 if x_fix[i] == hi[i] and x_fix[i] != lo[i] else
                ybox[i] > 1e-9 if x_fix[i] == lo[i] and x_fix[i] != hi[i] else False) for i in fixed):
            continue
        f = 0.5 * x @ P @ x + q @ x
        if best is None or f < best[0]:
            best = (f, x)
    return best


def random_qp(rng):
    n = int(rng.integers(1, 11))
    M = rng.normal(size=(n, n))
    P = M @ M.T + 1e-2 * np.eye(n)
    q = rng.normal(size=n) * 3
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for i in rng.choice(n, size=min(n, 6), replace=False):
        kind = rng.integers(0, 3)
        if kind in (0, 2):
            lo[i] = rng.uniform(-1.0, 0.0)
        if kind in (1, 2):
            hi[i] = rng.uniform(0.0, 1.0)
    m = int(rng.integers(0, min(2, n - 1) + 1)) if n > 1 else 0
    A = rng.normal(size=(m, n))
    # equality right-hand side from a box-feasible point
    x_feas = np.clip(rng.normal(size=n) * 0.3, lo, hi)
    return P, q, lo, hi, A, A @ x_feas


def test_clipped_scalar():
    x, status = solve_qp(QpProblem([[1.0]], [-1.0], [0.0], [0.4]))
    assert status == SOLVED
    assert x[0] == pytest.approx(0.4, abs=1e-10)


def test_unconstrained_stationarity(rng):
    q = rng.normal(size=5)
    x, status = solve_qp(QpProblem(np.eye(5), q))
    assert status == SOLVED
    np.testing.assert_allclose(x, -q, atol=1e-10)


def test_two_variables_one_active_bound():
    P = np.array([[2.0, 0.5], [0.5, 1.0]])
    q = np.array([-4.0, 1.0])
    lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    res = solve_qp(QpProblem(P, q, lo, hi))
    f, x = enumerate_kkt(P, q, lo, hi, np.zeros((0, 2)), np.zeros(0))
    assert res.status == SOLVED
    np.testing.assert_allclose(res.x, x, atol=1e-8)
    assert res.x[0] == pytest.approx(1.0, abs=1e-12)


def test_infeasible_equalities():
    p = QpProblem(np.eye(2), np.zeros(2), [0.0, 0.0], [1.0, 1.0], A_eq=[[1.0, 1.0]], b_eq=[5.0])
    assert solve_qp(p).status == INFEASIBLE


def test_iteration_cap_reports_status():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(10, 10))
    res = solve_qp(QpProblem(M @ M.T + 1e-6 * np.eye(10), rng.normal(size=10), -np.ones(10), np.ones(10)),
                   tol=1e-14, max_iter=3)
    assert res.status == MAX_ITER
    assert np.isfinite(res.prim_res)


def test_problem_validation():
    with pytest.raises(ConfigurationError):
        QpProblem(np.eye(2), np.zeros(3))
    with pytest.raises(ConfigurationError):
        QpProblem(np.eye(1), [0.0], [1.0], [0.0])


def test_random_qps_against_enumeration():
    rng = np.random.default_rng(42)
    for _ in range(60):
        P, q, lo, hi, A, b = random_qp(rng)
        p = QpProblem(P, q, lo, hi, A if A.size else None, b if A.size else None)
        res = solve_qp(p, tol=1e-9)
        f_ref, _ = enumerate_kkt(P, q, lo, hi, A, b)
        assert res.status == SOLVED
        assert abs(p.objective(res.x) - f_ref) <= 1e-7 * max(1.0, abs(f_ref))
        assert kkt_residual(p, res.x, res.y_box, res.y_eq) <= 1e-6
        assert np.all(res.x >= lo) and np.all(res.x <= hi)


@given(seed=st.integers(0, 2**31))
def test_solution_respects_box_exactly(seed):
    rng = np.random.default_rng(seed)
    P, q, lo, hi, A, b = random_qp(rng)
    res = solve_qp(QpProblem(P, q, lo, hi))
    assert np.all(res.x >= lo) and np.all(res.x <= hi)


def test_deterministic():
    rng = np.random.default_rng(5)
    P, q, lo, hi, A, b = random_qp(rng)
    p = QpProblem(P, q, lo, hi)
    assert solve_qp(p).x.tobytes() == solve_qp(p).x.tobytes()
