"""Dense convex QP solver for small problems.

    minimize    0.5 x'Px + q'x
    subject to  lo <= x <= hi,  A_eq x = b_eq

Operator splitting (ADMM in the OSQP form) followed by an active-set polish
step that solves the KKT system on the identified active set, so returned
solutions are accurate to factorization precision when the polish succeeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from r2rlearn.errors import ConfigurationError

SOLVED = "solved"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"


@dataclass
class QpProblem:
    P: np.ndarray
    q: np.ndarray
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        self.q = np.asarray(self.q, dtype=float).reshape(-1)
        n = self.q.size
        if self.P.shape != (n, n):
            raise ConfigurationError(f"P has shape {self.P.shape}, expected ({n}, {n})")
        self.lo = np.full(n, -np.inf) if self.lo is None else np.asarray(self.lo, dtype=float).reshape(-1)
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float).reshape(-1)
        if self.lo.size != n or self.hi.size != n:
            raise ConfigurationError("bound vectors must match the number of variables")
        if np.any(self.lo > self.hi):
            raise ConfigurationError("lower bounds exceed upper bounds")
        if self.A_eq is None:
            self.A_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        else:
            self.A_eq = np.atleast_2d(np.asarray(self.A_eq, dtype=float))
            self.b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
            if self.A_eq.shape[1] != n or self.A_eq.shape[0] != self.b_eq.size:
                raise ConfigurationError("equality constraint dimensions are inconsistent")

    @property
    def n(self) -> int:
        return self.q.size

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.P @ x + self.q @ x)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.P + self.P.T))[0]) if self.n else 0.0


@dataclass
class QpResult:
    x: np.ndarray
    status: str
    iterations: int = 0
    prim_res: float = np.inf
    dual_res: float = np.inf
    polished: bool = False
    y_box: np.ndarray = field(default=None, repr=False)
    y_eq: np.ndarray = field(default=None, repr=False)

    def __iter__(self):
        # allows ``x, status = solve_qp(...)``
        return iter((self.x, self.status))


def kkt_residual(p: QpProblem, x, y_box, y_eq) -> float:
    """Max of stationarity, primal violation and complementarity residuals.

    Sign convention: y_box > 0 on active upper bounds, < 0 on active lower.
    """
    x = np.asarray(x, dtype=float)
    stat = p.P @ x + p.q + y_box + p.A_eq.T @ y_eq
    prim = max(
        float(np.max(np.maximum(p.lo - x, 0.0), initial=0.0)),
        float(np.max(np.maximum(x - p.hi, 0.0), initial=0.0)),
        float(np.max(np.abs(p.A_eq @ x - p.b_eq), initial=0.0)),
    )
    gap_lo = np.where(np.isfinite(p.lo), x - p.lo, np.inf)
    gap_hi = np.where(np.isfinite(p.hi), p.hi - x, np.inf)
    comp = np.where(y_box < 0, np.minimum(-y_box, gap_lo), np.where(y_box > 0, np.minimum(y_box, gap_hi), 0.0))
    return max(float(np.max(np.abs(stat), initial=0.0)), prim, float(np.max(comp, initial=0.0)))


class _Admm:
    def __init__(self, p: QpProblem, sigma=1e-6, rho=0.1, alpha=1.6):
        self.p = p
        n, m_eq = p.n, p.A_eq.shape[0]
        self.A = np.vstack([np.eye(n), p.A_eq])
        self.l = np.concatenate([p.lo, p.b_eq])
        self.u = np.concatenate([p.hi, p.b_eq])
        self.is_eq = np.concatenate([p.lo == p.hi, np.ones(m_eq, dtype=bool)])
        self.free = np.isinf(self.l) & np.isinf(self.u)
        self.sigma, self.alpha = sigma, alpha
        self.P = 0.5 * (p.P + p.P.T)
        self.set_rho(rho)

    def set_rho(self, rho):
        self.rho0 = rho
        r = np.full(self.A.shape[0], rho)
        r[self.is_eq] = 1e3 * rho
        r[self.free] = 1e-6
        self.rho = r
        M = self.P + self.sigma * np.eye(self.p.n) + (self.A.T * r) @ self.A
        self.fac = linalg.cho_factor(M, lower=True, check_finite=False)

    def run(self, x, z, y, max_iter, eps):
        p, A, l, u = self.p, self.A, self.l, self.u
        sig, a = self.sigma, self.alpha
        it = 0
        rp = rd = np.inf
        while it < max_iter:
            it += 1
            rhs = sig * x - p.q + A.T @ (self.rho * z - y)
            xt = linalg.cho_solve(self.fac, rhs, check_finite=False)
            zt = A @ xt
            x = a * xt + (1 - a) * x
            zr = a * zt + (1 - a) * z
            z_new = np.clip(zr + y / self.rho, l, u)
            y = y + self.rho * (zr - z_new)
            z = z_new
            if it % 10 == 0 or it == max_iter:
                Ax = A @ x
                Px = self.P @ x
                Aty = A.T @ y
                rp = float(np.max(np.abs(Ax - z), initial=0.0))
                rd = float(np.max(np.abs(Px + p.q + Aty), initial=0.0))
                sp = max(np.max(np.abs(Ax), initial=0.0), np.max(np.abs(z), initial=0.0))
                sd = max(np.max(np.abs(Px), initial=0.0), np.max(np.abs(Aty), initial=0.0),
                         np.max(np.abs(p.q), initial=0.0))
                if rp <= eps * (1 + sp) and rd <= eps * (1 + sd):
                    break
                if it % 50 == 0:
                    ratio = np.sqrt((rp / (sp + 1e-30)) / (rd / (sd + 1e-30) + 1e-30))
                    if ratio > 5.0 or ratio < 0.2:
                        self.set_rho(float(np.clip(self.rho0 * ratio, 1e-6, 1e6)))
        return x, z, y, it, rp, rd


def _infeasibility_certificate(adm: _Admm, dy, eps=1e-7) -> bool:
    nrm = np.max(np.abs(dy), initial=0.0)
    if nrm <= 1e-12:
        return False
    dy = dy / nrm
    if np.max(np.abs(adm.A.T @ dy)) > eps:
        return False
    up = np.where(dy > 0, np.where(np.isfinite(adm.u), adm.u, np.inf) * dy, 0.0)
    lo = np.where(dy < 0, np.where(np.isfinite(adm.l), adm.l, -np.inf) * dy, 0.0)
    val = np.sum(up) + np.sum(lo)
    return bool(np.isfinite(val) and val < -eps)


def _polish(p: QpProblem, x, y_box, y_eq, delta=1e-10):
    """Solve the equality-constrained KKT on the guessed active set."""
    n = p.n
    at_lo = np.isfinite(p.lo) & ((x - p.lo < 1e-7 * (1 + np.abs(p.lo))) | (y_box < -1e-9))
    at_hi = np.isfinite(p.hi) & ((p.hi - x < 1e-7 * (1 + np.abs(p.hi))) | (y_box > 1e-9)) & ~at_lo
    fixed = at_lo | at_hi
    free = ~fixed
    xf = np.where(at_lo, p.lo, np.where(at_hi, p.hi, 0.0))
    P = 0.5 * (p.P + p.P.T)
    Ff = np.flatnonzero(free)
    m = p.A_eq.shape[0]
    nf = Ff.size
    K = np.zeros((nf + m, nf + m))
    K[:nf, :nf] = P[np.ix_(Ff, Ff)]
    K[:nf, nf:] = p.A_eq[:, Ff].T
    K[nf:, :nf] = p.A_eq[:, Ff]
    rhs = np.concatenate([-p.q[Ff] - P[np.ix_(Ff, fixed)] @ xf[fixed], p.b_eq - p.A_eq[:, fixed] @ xf[fixed]])
    Kreg = K + np.diag(np.concatenate([np.full(nf, delta), np.full(m, -delta)]))
    try:
        lu = linalg.lu_factor(Kreg, check_finite=False)
    except (linalg.LinAlgError, ValueError):
        return None
    sol = linalg.lu_solve(lu, rhs, check_finite=False)
    for _ in range(5):  # iterative refinement against the unregularized system
        sol = sol + linalg.lu_solve(lu, rhs - K @ sol, check_finite=False)
    if not np.all(np.isfinite(sol)):
        return None
    xp = xf.copy()
    xp[Ff] = sol[:nf]
    yeq = sol[nf:]
    ybox = -(P @ xp + p.q + p.A_eq.T @ yeq)
    ybox[free] = 0.0
    return xp, ybox, yeq


def _attainable(p: QpProblem, x, tol: float) -> float:
    """``tol``, raised to the rounding floor of the stationarity residual for
    badly scaled problems (entries of P x or q far above 1)."""
    scale = max(float(np.max(np.abs(p.q), initial=0.0)),
                float(np.max(np.abs(p.P), initial=0.0)) * float(np.max(np.abs(x), initial=0.0)))
    return max(tol, 64 * np.finfo(float).eps * scale)


def solve_qp(p: QpProblem, tol: float = 1e-8, max_iter: int = 10000, warm_x=None) -> QpResult:
    """Solve ``p``; ``status`` is 'solved', 'infeasible' or 'max_iter'."""
    n = p.n
    if n == 0:
        return QpResult(np.zeros(0), SOLVED, 0, 0.0, 0.0)
    adm = _Admm(p)
    x = np.zeros(n) if warm_x is None else np.asarray(warm_x, dtype=float).copy()
    z = np.clip(adm.A @ x, adm.l, adm.u)
    y = np.zeros(adm.A.shape[0])
    best = None
    total = 0
    eps = 1e-5
    while total < max_iter:
        y_prev = y.copy()
        x, z, y, it, rp, rd = adm.run(x, z, y, min(max_iter - total, 400), eps)
        total += it
        y_box, y_eq = y[:n], y[n:]
        pol = _polish(p, x, y_box, y_eq)
        if pol is not None:
            xp, ybp, yep = pol
            # dual sign check: multipliers must point into the feasible set
            res = kkt_residual(p, xp, ybp, yep)
            if res <= _attainable(p, xp, tol):
                return QpResult(xp, SOLVED, total, res, res, True, ybp, yep)
            if best is None or res < best[0]:
                best = (res, xp, ybp, yep)
        res_admm = kkt_residual(p, np.clip(x, p.lo, p.hi), y_box, y_eq)
        if res_admm <= _attainable(p, x, tol):
            return QpResult(np.clip(x, p.lo, p.hi), SOLVED, total, rp, rd, False, y_box, y_eq)
        if _infeasibility_certificate(adm, y - y_prev):
            return QpResult(x, INFEASIBLE, total, rp, rd)
        eps = max(eps * 0.1, 1e-12)
    if best is not None:
        res, xp, ybp, yep = best
        return QpResult(xp, MAX_ITER, total, res, res, True, ybp, yep)
    return QpResult(np.clip(x, p.lo, p.hi), MAX_ITER, total, rp, rd, False, y[:n], y[n:])
