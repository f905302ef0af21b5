"""Mismatch-compensated proximal step as a receding-horizon contouring problem.

At every time t' of the run a horizon-N problem in the inputs u, the path
velocities phi and the path parameters s is solved:

    min  sum_j ||eps(j)||^2_Qe + tr(Qe var(j)) - gamma phi(j) + ||u(j)||^2_Qu
              + 1/(2 lam) ||u(j) - v(t'+j)||^2
    s.t. y(j+1) = C(A x(j) + B u(j)) + mu(j)          (nominal + GP mean)
         s(j+1) = s(j) + T phi(j),  s in [0, 1],  phi in [0, phi_max]
         u in input box  and  |u - u_approx| <= trust_radius

where eps = [lag, contour] is linear in (y, phi, s) after linearizing the path
at approximation values of s. The last horizon stage is terminal: it drops the
progress reward and the input weight. Only the first input of each solve is
applied.

A-GPR freezes mu and var at the approximation trajectory (a QP per step).
F-GPR runs sequential QPs with the GP mean linearized along the candidate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from r2rlearn import path as pathmod
from r2rlearn.errors import ConfigurationError, RunError
from r2rlearn.gpr import ConditionedGP, GpHyperparams, MismatchDataset, nearest_path_index, window
from r2rlearn.lti import StateSpaceModel, markov_parameters, simulate_nominal
from r2rlearn.qp import SOLVED, QpProblem, solve_qp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OcpConfig:
    N: int = 20
    lam: float = 10.0
    Q_e: tuple = ((100.0, 0.0), (0.0, 1.0))
    Q_u: tuple = ((0.0, 0.0), (0.0, 0.0))
    gamma: float = 0.0
    u_min: tuple = (-1e3, -1e3)
    u_max: tuple = (1e3, 1e3)
    phi_max: float = 1.0
    n_w: int = 40
    trust_radius: float = 0.05
    T: float = 0.01
    qp_tol: float = 1e-9
    qp_max_iter: int = 5000
    sqp_max_iters: int = 5
    sqp_tol: float = 1e-7

    def __post_init__(self):
        Qe = np.asarray(self.Q_e, dtype=float)
        Qu = np.asarray(self.Q_u, dtype=float)
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"horizon N must be a positive integer, got {self.N}")
        if not self.lam > 0:
            raise ConfigurationError(f"proximal weight lam must be > 0, got {self.lam}")
        for name, M in (("Q_e", Qe), ("Q_u", Qu)):
            if M.shape != (2, 2) or not np.allclose(M, M.T) or np.linalg.eigvalsh(M)[0] < -1e-12:
                raise ConfigurationError(f"{name} must be a symmetric positive semidefinite 2x2 matrix")
        if self.gamma < 0:
            raise ConfigurationError("gamma must be >= 0")
        if not self.phi_max > 0:
            raise ConfigurationError("phi_max must be > 0")
        if int(self.n_w) != self.n_w or self.n_w < 2:
            raise ConfigurationError("window size n_w must be an integer >= 2")
        if self.trust_radius < 0:
            raise ConfigurationError("trust_radius must be >= 0")
        if not self.T > 0:
            raise ConfigurationError("sample time T must be > 0")
        if np.any(np.asarray(self.u_min) > np.asarray(self.u_max)):
            raise ConfigurationError("u_min exceeds u_max")
        object.__setattr__(self, "Q_e", tuple(map(tuple, Qe.tolist())))
        object.__setattr__(self, "Q_u", tuple(map(tuple, Qu.tolist())))
        object.__setattr__(self, "u_min", tuple(float(v) for v in np.ravel(self.u_min)))
        object.__setattr__(self, "u_max", tuple(float(v) for v in np.ravel(self.u_max)))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "n_w", int(self.n_w))

    @property
    def Qe(self) -> np.ndarray:
        return np.array(self.Q_e)

    @property
    def Qu(self) -> np.ndarray:
        return np.array(self.Q_u)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (list(map(list, v)) if k in ("Q_e", "Q_u") else list(v) if isinstance(v, tuple) else v)
                for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "OcpConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown ocp keys: {sorted(unknown)}")
        return cls(**d)


def stage_cost(eps_tilde, y_var, u, phi, cfg: OcpConfig, terminal: bool = False) -> float:
    """||eps||^2_Qe + tr(Qe diag(y_var)) - gamma phi + ||u||^2_Qu."""
    eps = np.asarray(eps_tilde, dtype=float)
    Qe = cfg.Qe
    val = float(eps @ Qe @ eps + np.diag(Qe) @ np.asarray(y_var, dtype=float))
    if not terminal:
        u = np.asarray(u, dtype=float)
        val += float(-cfg.gamma * phi + u @ cfg.Qu @ u)
    return val


# trajectories ------------------------------------------------------------


def nominal_s_plan(path: pathmod.ReferencePath, n_i: int) -> np.ndarray:
    """s(0..n_i) matching the discretized reference: s(t+1) = sample t."""
    return np.concatenate([[0.0], pathmod.sample_parameters(path, n_i)])


@dataclass
class StepDiagnostic:
    t: int
    alpha: int
    n_window: int
    status: str
    qp_iterations: int
    kkt_residual: float
    fallback: bool = False
    sqp_iterations: int = 0
    min_eig: float = float("nan")


@dataclass
class SweepResult:
    u: np.ndarray           # (n_i, n_u) applied first inputs
    s: np.ndarray           # (n_i + 1,) path parameter s(0..n_i)
    phi: np.ndarray         # (n_i,)
    diagnostics: list = field(default_factory=list)

    @property
    def n_fallback(self) -> int:
        return sum(d.fallback for d in self.diagnostics)


class _Horizon:
    """Horizon-invariant pieces: Markov parameters and free-response maps."""

    def __init__(self, model: StateSpaceModel, N: int):
        self.model = model
        self.N = N
        self.markov = markov_parameters(model, N)          # C A^j B
        nx = model.n_x
        self.CA = np.empty((N, model.n_y, nx))             # C A^{j+1}
        self.Apow = np.empty((N + 1, nx, nx))              # A^j
        Ak = np.eye(nx)
        for j in range(N + 1):
            self.Apow[j] = Ak
            if j < N:
                self.CA[j] = model.C @ Ak @ model.A
            Ak = Ak @ model.A
        # G[j, i] = C A^{j-i} B for i <= j: output y(j+1) from u(i)
        ny, nu = model.n_y, model.n_u
        lag = np.subtract.outer(np.arange(N), np.arange(N))
        blocks = self.markov[np.clip(lag, 0, None)] * (lag >= 0)[:, :, None, None]
        self.G = blocks.transpose(0, 2, 1, 3).reshape(N * ny, N * nu)
        # X[j] = state x(j) from u(i), i < j:  A^{j-1-i} B
        AB = np.einsum("jab,bc->jac", self.Apow[:N], model.B)   # A^j B
        Xb = np.zeros((N, nx, N, nu))
        for j in range(1, N):
            for i in range(j):
                Xb[j, :, i, :] = AB[j - 1 - i]
        self.Xu = Xb.reshape(N * nx, N * nu)

    def outputs(self, Ne, x0):
        ny = self.model.n_y
        free = (self.CA[:Ne] @ x0).reshape(-1)
        return self.G[: Ne * ny, : Ne * self.model.n_u], free

    def states(self, Ne, x0):
        nx, nu = self.model.n_x, self.model.n_u
        free = (self.Apow[:Ne] @ x0).reshape(-1)
        return self.Xu[: Ne * nx, : Ne * nu], free


class _StepProblem:
    """Assembles the horizon QP at one t' given frozen/linearized GP terms."""

    def __init__(self, hz: _Horizon, cfg: OcpConfig, path, L_r, t0, Ne, x0, s0, s_lin, v, u_box_lo, u_box_hi):
        self.hz, self.cfg, self.Ne = hz, cfg, Ne
        nu = hz.model.n_u
        self.nu = nu
        self.x0, self.s0 = x0, s0
        self.v = v
        self.nv = Ne * nu + 2 * Ne
        self.iu = slice(0, Ne * nu)
        self.iphi = slice(Ne * nu, Ne * nu + Ne)
        self.is_ = slice(Ne * nu + Ne, self.nv)
        # path linearization per stage at approximation s-values
        lins = [pathmod.linearize_errors(path, float(np.clip(sv, 0.0, 1.0)), cfg.T, L_r) for sv in s_lin]
        self.Phi = np.array([l.Phi for l in lins])        # (Ne, 2, 3)
        self.caff = np.array([l.c_aff for l in lins])      # (Ne, 2)
        self.s_lin = np.asarray(s_lin, dtype=float)
        self.L_r = L_r
        lo = np.concatenate([u_box_lo.reshape(-1), np.zeros(Ne), np.zeros(Ne)])
        hi = np.concatenate([u_box_hi.reshape(-1), np.full(Ne, cfg.phi_max), np.ones(Ne)])
        self.lo, self.hi = lo, hi
        # s(j+1) - s(j) - T phi(j) = 0, s(0) = s0 fixed
        Aeq = np.zeros((Ne, self.nv))
        beq = np.zeros(Ne)
        for j in range(Ne):
            Aeq[j, self.is_.start + j] = 1.0
            Aeq[j, self.iphi.start + j] = -cfg.T
            if j == 0:
                beq[j] = s0
            else:
                Aeq[j, self.is_.start + j - 1] = -1.0
        self.Aeq, self.beq = Aeq, beq

    def error_map(self, Gy, y_free):
        """eps = E w + f for the stacked [lag, contour] errors of all stages.

        Stage j pairs y(t'+j+1) with s(t'+j+1) = s(t'+j) + T phi(j), the s
        variable of that stage. The path is linearized at the approximation
        value s_lin(j) of that parameter; the lag row is corrected to first
        order by L (s - s_lin), which carries the T L phi dependence.
        ``Gy`` maps the stacked inputs to the stacked outputs y(1..Ne) and
        ``y_free`` is the input-independent part (free response + GP terms).
        """
        Ne, ny = self.Ne, 2
        E = np.zeros((2 * Ne, self.nv))
        f = np.zeros(2 * Ne)
        for j in range(Ne):
            Py = self.Phi[j][:, :2]
            rows = slice(2 * j, 2 * j + 2)
            E[rows, self.iu] = Py @ Gy[ny * j: ny * j + ny]
            f[rows] = Py @ y_free[ny * j: ny * j + ny] + self.caff[j]
            E[2 * j, self.is_.start + j] += self.L_r
            f[2 * j] -= self.L_r * self.s_lin[j]
        return E, f

    def qp(self, E, f, lin_cost=None) -> QpProblem:
        cfg, Ne, nu = self.cfg, self.Ne, self.nu
        Qbig = np.kron(np.eye(Ne), cfg.Qe)
        P = 2.0 * E.T @ Qbig @ E
        q = 2.0 * E.T @ (Qbig @ f)
        iu = np.arange(self.iu.start, self.iu.stop)
        P[iu, iu] += 1.0 / cfg.lam
        q[iu] -= self.v.reshape(-1) / cfg.lam
        if Ne > 1:
            Qu2 = np.kron(np.eye(Ne - 1), 2.0 * cfg.Qu)
            sl = slice(0, (Ne - 1) * nu)
            P[sl, sl] += Qu2
            q[self.iphi.start: self.iphi.start + Ne - 1] -= cfg.gamma
        if lin_cost is not None:
            q = q + lin_cost
        P = 0.5 * (P + P.T)
        return QpProblem(P, q, self.lo, self.hi, self.Aeq, self.beq)

    def cost(self, w, eps, var) -> float:
        """Horizon objective (without constants) for diagnostics/line search."""
        cfg, Ne, nu = self.cfg, self.Ne, self.nu
        Qe = cfg.Qe
        uu = w[self.iu].reshape(Ne, nu)
        phi = w[self.iphi]
        e2 = eps.reshape(Ne, 2)
        val = float(np.einsum("ja,ab,jb->", e2, Qe, e2) + np.sum(var * np.diag(Qe)))
        val += float(np.sum((uu - self.v) ** 2) / (2 * cfg.lam))
        if Ne > 1:
            val += float(-cfg.gamma * phi[:-1].sum() + np.einsum("ja,ab,jb->", uu[:-1], cfg.Qu, uu[:-1]))
        return val


def _trust_box(u_approx, cfg: OcpConfig):
    lo = np.maximum(np.asarray(cfg.u_min), u_approx - cfg.trust_radius)
    hi = np.minimum(np.asarray(cfg.u_max), u_approx + cfg.trust_radius)
    # approximation outside the input box: clamp to the nearest feasible point
    hi = np.maximum(hi, lo)
    return lo, hi


def _check_inputs(model, D, hp, v, approx_u, approx_s):
    v = np.asarray(v, dtype=float).reshape(-1, model.n_u)
    n_i = v.shape[0]
    approx_u = np.asarray(approx_u, dtype=float).reshape(-1, model.n_u)
    approx_s = np.asarray(approx_s, dtype=float).reshape(-1)
    if approx_u.shape[0] != n_i or approx_s.size != n_i + 1:
        raise ConfigurationError("approximation trajectory lengths do not match the run length")
    if D.n_g == 0:
        raise ConfigurationError("the receding-horizon solve needs a nonempty dataset")
    if D.s_path is None:
        raise ConfigurationError("dataset lacks the path-parameter vector s_path")
    if model.n_y != 2 or model.n_u != 2:
        raise ConfigurationError("contouring control needs a two-input two-output model")
    if hp.n_features != model.n_x + model.n_u:
        raise ConfigurationError(
            f"hyperparameters expect {hp.n_features} features, model gives {model.n_x + model.n_u}"
        )
    return v, approx_u, approx_s, n_i


def solve_receding_horizon(model: StateSpaceModel, D: MismatchDataset, hp: GpHyperparams,
                           path: pathmod.ReferencePath, v, approx_u, approx_s, cfg: OcpConfig,
                           full_gp: bool = False, max_fallback_fraction: float = 0.1) -> SweepResult:
    """Receding-horizon sweep over the whole run (A-GPR, or F-GPR with ``full_gp``).

    ``approx_u``/``approx_s`` are the approximation trajectory: the GP is
    evaluated along its features, the path is linearized at its s-values
    (shifted to the current s), and the trust region is centred on its inputs.
    """
    v, approx_u, approx_s, n_i = _check_inputs(model, D, hp, v, approx_u, approx_s)
    nu, nx = model.n_u, model.n_x
    L_r = path.length
    hz = _Horizon(model, cfg.N)
    x_app, _ = simulate_nominal(model, approx_u)
    Z_app = np.hstack([x_app[:-1], approx_u])
    half = cfg.n_w // 2

    u_out = np.empty((n_i, nu))
    s_out = np.empty(n_i + 1)
    phi_out = np.empty(n_i)
    diags = []
    x_cur = np.zeros(nx)
    s_cur = float(approx_s[0])
    s_out[0] = s_cur
    warm = None

    for t0 in range(n_i):
        Ne = min(cfg.N, n_i - t0)
        alpha = nearest_path_index(s_cur, D.s_path)
        Dw = window(D, alpha, -half, half)
        gp = ConditionedGP(Dw, hp)
        # approximation of s(t'+1 .. t'+Ne), shifted to the current s
        s_lin = np.clip(s_cur + approx_s[t0 + 1:t0 + Ne + 1] - approx_s[t0], 0.0, 1.0)
        u_lo, u_hi = _trust_box(approx_u[t0:t0 + Ne], cfg)
        sp = _StepProblem(hz, cfg, path, L_r, t0, Ne, x_cur, s_cur, s_lin,
                          v[t0:t0 + Ne], u_lo, u_hi)
        Gy, y_free0 = hz.outputs(Ne, x_cur)
        Xu, x_free = hz.states(Ne, x_cur)

        # frozen GP along the approximation trajectory (A-GPR, SQP iteration 1)
        mu, var = gp.predict(Z_app[t0:t0 + Ne])
        E, f = sp.error_map(Gy, y_free0 + mu.reshape(-1))
        prob = sp.qp(E, f)
        x_warm = _shift_warm(warm, sp, approx_u[t0:t0 + Ne], s_lin)
        res = solve_qp(prob, tol=cfg.qp_tol, max_iter=cfg.qp_max_iter, warm_x=x_warm)
        status, iters, kkt = res.status, res.iterations, res.prim_res
        w = res.x if res.status == SOLVED else None
        sqp_iters = 1
        min_eig = prob.min_eigenvalue() if t0 == 0 else float("nan")

        if full_gp and w is not None:
            w, extra, st = _sqp_refine(sp, gp, w, Gy, y_free0, Xu, x_free, cfg)
            sqp_iters += extra
            if st is not None:
                status = st

        fallback = w is None
        if fallback:
            # keep the step feasible: ILC pre-step input clipped to the box
            u0 = np.clip(v[t0], u_lo[0], u_hi[0])
            s_next = float(np.clip(s_lin[0], s_cur, 1.0))
            phi0 = (s_next - s_cur) / cfg.T
            warm = None
        else:
            u0 = w[sp.iu][:nu]
            phi0 = float(w[sp.iphi][0])
            s_next = float(w[sp.is_][0])
            warm = (w, Ne)
        u_out[t0] = u0
        phi_out[t0] = phi0
        x_cur = model.A @ x_cur + model.B @ u0
        s_cur = min(max(s_next, 0.0), 1.0)
        s_out[t0 + 1] = s_cur
        diags.append(StepDiagnostic(t0, alpha, Dw.n_g, status, iters, float(kkt), fallback, sqp_iters, min_eig))

    out = SweepResult(u_out, s_out, phi_out, diags)
    if out.n_fallback > max_fallback_fraction * n_i:
        raise RunError(f"QP failed at {out.n_fallback} of {n_i} receding-horizon steps")
    if out.n_fallback:
        log.warning("QP fallback at %d of %d steps", out.n_fallback, n_i)
    return out


def _shift_warm(warm, sp: _StepProblem, u_app, s_lin):
    nu, Ne = sp.nu, sp.Ne
    if warm is None:
        w0 = np.concatenate([u_app.reshape(-1), np.zeros(Ne), s_lin])
        return np.clip(w0, sp.lo, sp.hi)
    w, Np = warm
    uu = w[:Np * nu].reshape(Np, nu)
    ph = w[Np * nu:Np * nu + Np]
    ss = w[Np * nu + Np:]
    take = min(Np - 1, Ne)
    u_new = np.vstack([uu[1:1 + take], np.repeat(uu[-1:], Ne - take, axis=0)])
    ph_new = np.concatenate([ph[1:1 + take], np.repeat(ph[-1:], Ne - take)])
    s_new = np.concatenate([ss[1:1 + take], np.repeat(ss[-1:], Ne - take)])
    return np.clip(np.concatenate([u_new.reshape(-1), ph_new, s_new]), sp.lo, sp.hi)


def _sqp_refine(sp: _StepProblem, gp: ConditionedGP, w, Gy, y_free0, Xu, x_free, cfg: OcpConfig):
    """Sequential QPs with the GP mean/variance linearized along the candidate.

    Returns the accepted candidate, the number of extra iterations and an
    optional status override.
    """
    nu, nx, Ne = sp.nu, sp.hz.model.n_x, sp.Ne
    Qe_diag = np.diag(cfg.Qe)

    def features(wc):
        uu = wc[sp.iu]
        xs = (Xu @ uu + x_free).reshape(Ne, nx)
        return np.hstack([xs, uu.reshape(Ne, nu)])

    def true_cost(wc):
        mu, var = gp.predict(features(wc))
        E, f = sp.error_map(Gy, y_free0 + mu.reshape(-1))
        return sp.cost(wc, E @ wc + f, var)

    cur = w
    cur_cost = true_cost(cur)
    extra = 0
    status = None
    for _ in range(cfg.sqp_max_iters - 1):
        extra += 1
        Zc = features(cur)
        mu, var, dmu, dvar = gp.predict(Zc, grad=True)
        # dz/dw for each stage: rows [x(j); u(j)] as functions of stacked u
        nz = nx + nu
        dZ = np.zeros((Ne, nz, Ne * nu))
        dZ[:, :nx, :] = Xu.reshape(Ne, nx, Ne * nu)
        for j in range(Ne):
            dZ[j, nx:, j * nu:(j + 1) * nu] = np.eye(nu)
        Jmu = np.einsum("jmz,jzk->jmk", dmu, dZ).reshape(Ne * 2, Ne * nu)
        uc = cur[sp.iu]
        # y = G u + free + mu(zc) + Jmu (u - uc)
        E, f = sp.error_map(Gy + Jmu, y_free0 + mu.reshape(-1) - Jmu @ uc)
        gvar = np.einsum("jm,jmz,jzk->k", np.broadcast_to(Qe_diag, (Ne, 2)), dvar, dZ)
        lin = np.zeros(sp.nv)
        lin[sp.iu] = gvar
        res = solve_qp(sp.qp(E, f, lin_cost=lin), tol=cfg.qp_tol, max_iter=cfg.qp_max_iter, warm_x=cur)
        if res.status != SOLVED:
            status = "sqp_stall"
            break
        step = res.x - cur
        tau, accepted = 1.0, False
        while tau >= 1.0 / 64:
            cand = cur + tau * step
            c = true_cost(cand)
            if c <= cur_cost:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            break
        cur, cur_cost = cand, c
        if np.max(np.abs(tau * step)) < cfg.sqp_tol:
            break
    return cur, extra, status


def solve_receding_horizon_agpr(model, D, hp, path, v, approx_u, approx_s, cfg: OcpConfig) -> SweepResult:
    return solve_receding_horizon(model, D, hp, path, v, approx_u, approx_s, cfg, full_gp=False)


def solve_receding_horizon_fgpr(model, D, hp, path, v, approx_u, approx_s, cfg: OcpConfig) -> SweepResult:
    return solve_receding_horizon(model, D, hp, path, v, approx_u, approx_s, cfg, full_gp=True)


# learning objective --------------------------------------------------------


def window_posteriors(Zq, s_traj, D: MismatchDataset, hp: GpHyperparams, n_w: int):
    """GP mean/variance at each row of Zq using the window around s(t)."""
    n = Zq.shape[0]
    half = n_w // 2
    mean = np.empty((n, hp.n_y))
    var = np.empty((n, hp.n_y))
    cache = {}
    for t in range(n):
        alpha = nearest_path_index(s_traj[t], D.s_path)
        gp = cache.get(alpha)
        if gp is None:
            gp = cache[alpha] = ConditionedGP(window(D, alpha, -half, half), hp)
        m, v_ = gp.predict(Zq[t:t + 1])
        mean[t], var[t] = m[0], v_[0]
    return mean, var


def trajectory_errors(path, y, s_traj, T):
    """[lag, contour] of y(t+1) against r(s(t+1)), t = 0..n_i-1."""
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    s_traj = np.asarray(s_traj, dtype=float)
    n = y.shape[0]
    eps = np.empty((n, 2))
    for t in range(n):
        lin = pathmod.linearize_errors(path, float(np.clip(s_traj[t + 1], 0.0, 1.0)), T)
        eps[t] = lin.errors(y[t], 0.0)
    return eps


def learning_cost(model, u, y, s_traj, D, hp, path, cfg: OcpConfig) -> float:
    """||eps(y)||^2_Qe summed over the run plus the summed weighted GP
    variance at the run's nominal features, given dataset D.
    """
    u = np.asarray(u, dtype=float).reshape(-1, model.n_u)
    x, _ = simulate_nominal(model, u)
    Zq = np.hstack([x[:-1], u])
    _, var = window_posteriors(Zq, s_traj, D, hp, cfg.n_w)
    eps = trajectory_errors(path, y, s_traj, cfg.T)
    Qe = cfg.Qe
    return float(np.einsum("ta,ab,tb->", eps, Qe, eps) + np.sum(var @ np.diag(Qe)))


def predicted_cost(model, u, s_traj, D, hp, path, cfg: OcpConfig) -> float:
    """Learning cost of the GP mean prediction y = nominal(u) + mu(z | D)."""
    u = np.asarray(u, dtype=float).reshape(-1, model.n_u)
    x, y_nom = simulate_nominal(model, u)
    Zq = np.hstack([x[:-1], u])
    mean, _ = window_posteriors(Zq, s_traj, D, hp, cfg.n_w)
    return learning_cost(model, u, y_nom + mean, s_traj, D, hp, path, cfg)


def realized_cost(model, u, y, s_traj, D, hp, path, cfg: OcpConfig) -> float:
    """Learning cost evaluated on the measured outputs of a run."""
    return learning_cost(model, u, y, s_traj, D, hp, path, cfg)
