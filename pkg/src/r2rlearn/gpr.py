"""Per-output-channel GP regression of the output mismatch.

Each output channel m has its own squared-exponential kernel

    k_m(zi, zj) = sf_m**2 * exp(-0.5 * sum(((zi - zj) / ell_m) ** 2))

(``ell_m`` are lengthscales, the diagonal of Lambda_m is ``ell_m**2``) and a
noise level ``sn_m``. Prior mean is zero.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.spatial import cKDTree

from r2rlearn.errors import ConfigurationError, FittingError, NumericalError
from r2rlearn.lti import StateSpaceModel, simulate_nominal

log = logging.getLogger(__name__)

_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ChannelHyperparams:
    noise_std: float
    signal_std: float
    lengthscales: np.ndarray

    def __post_init__(self):
        ls = np.asarray(self.lengthscales, dtype=float).reshape(-1)
        object.__setattr__(self, "lengthscales", ls)
        if not (self.noise_std > 0 and self.signal_std > 0 and np.all(ls > 0)):
            raise ConfigurationError(
                "GP hyperparameters must be strictly positive "
                f"(noise_std={self.noise_std}, signal_std={self.signal_std}, lengthscales={ls})"
            )
        if not (np.isfinite(self.noise_std) and np.isfinite(self.signal_std) and np.all(np.isfinite(ls))):
            raise ConfigurationError("GP hyperparameters must be finite")

    def to_log(self) -> np.ndarray:
        return np.concatenate([[math.log(self.noise_std), math.log(self.signal_std)], np.log(self.lengthscales)])

    @classmethod
    def from_log(cls, theta) -> "ChannelHyperparams":
        theta = np.asarray(theta, dtype=float)
        return cls(float(np.exp(theta[0])), float(np.exp(theta[1])), np.exp(theta[2:]))


@dataclass(frozen=True)
class GpHyperparams:
    """One ChannelHyperparams per output channel."""

    channels: tuple

    def __post_init__(self):
        chans = tuple(self.channels)
        if not chans:
            raise ConfigurationError("need at least one output channel")
        dims = {c.lengthscales.size for c in chans}
        if len(dims) != 1:
            raise ConfigurationError("all channels must share the feature dimension")
        object.__setattr__(self, "channels", chans)

    @property
    def n_y(self) -> int:
        return len(self.channels)

    @property
    def n_features(self) -> int:
        return self.channels[0].lengthscales.size

    def __getitem__(self, m) -> ChannelHyperparams:
        return self.channels[m]

    def __eq__(self, other):
        if not isinstance(other, GpHyperparams) or other.n_y != self.n_y:
            return NotImplemented if not isinstance(other, GpHyperparams) else False
        return all(
            a.noise_std == b.noise_std
            and a.signal_std == b.signal_std
            and np.array_equal(a.lengthscales, b.lengthscales)
            for a, b in zip(self.channels, other.channels)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "channels": [
                {
                    "noise_std": c.noise_std,
                    "signal_std": c.signal_std,
                    "lengthscales": c.lengthscales.tolist(),
                }
                for c in self.channels
            ]
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GpHyperparams":
        try:
            chans = [
                ChannelHyperparams(float(c["noise_std"]), float(c["signal_std"]), c["lengthscales"])
                for c in d["channels"]
            ]
        except KeyError as exc:
            raise ConfigurationError(f"missing hyperparameter key {exc}") from None
        return cls(tuple(chans))


@dataclass(frozen=True)
class MismatchDataset:
    """Features Z (rows [x; u]) and observations Delta (rows delta)."""

    Z: np.ndarray
    Delta: np.ndarray
    s_path: np.ndarray | None = None

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        Delta = np.asarray(self.Delta, dtype=float)
        if Delta.ndim == 1:
            Delta = Delta[:, None]
        if Z.shape[0] != Delta.shape[0]:
            raise ConfigurationError(f"Z has {Z.shape[0]} rows but Delta has {Delta.shape[0]}")
        if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(Delta))):
            raise ConfigurationError("dataset entries must be finite")
        Z.setflags(write=False)
        Delta.setflags(write=False)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "Delta", Delta)
        if self.s_path is not None:
            s = np.asarray(self.s_path, dtype=float).reshape(-1)
            if s.size != Z.shape[0]:
                raise ConfigurationError("s_path length must equal the number of rows")
            s.setflags(write=False)
            object.__setattr__(self, "s_path", s)

    @property
    def n_g(self) -> int:
        return self.Z.shape[0]

    @classmethod
    def empty(cls, n_features: int, n_y: int) -> "MismatchDataset":
        return cls(np.zeros((0, n_features)), np.zeros((0, n_y)), np.zeros(0))

    def append(self, other: "MismatchDataset") -> "MismatchDataset":
        s = None
        if self.s_path is not None and other.s_path is not None:
            s = np.concatenate([self.s_path, other.s_path])
        return MismatchDataset(np.vstack([self.Z, other.Z]), np.vstack([self.Delta, other.Delta]), s)

    def to_csv(self, fh) -> None:
        nz, ny = self.Z.shape[1], self.Delta.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        header = [f"z{i}" for i in range(nz)] + [f"delta{m}" for m in range(ny)]
        if self.s_path is not None:
            header.append("s_path")
        w.writerow(header)
        for j in range(self.n_g):
            row = [repr(float(v)) for v in self.Z[j]] + [repr(float(v)) for v in self.Delta[j]]
            if self.s_path is not None:
                row.append(repr(float(self.s_path[j])))
            w.writerow(row)


# kernels -----------------------------------------------------------------


def _check_channel(hp: ChannelHyperparams):
    if not isinstance(hp, ChannelHyperparams):
        raise ConfigurationError("expected ChannelHyperparams")


def kernel_se(zi, zj, hp: ChannelHyperparams) -> float:
    _check_channel(hp)
    d = (np.asarray(zi, dtype=float) - np.asarray(zj, dtype=float)) / hp.lengthscales
    return float(hp.signal_std**2 * math.exp(-0.5 * float(d @ d)))


def kernel_matrix(Z1, Z2, hp: ChannelHyperparams) -> np.ndarray:
    A = np.asarray(Z1, dtype=float) / hp.lengthscales
    B = np.asarray(Z2, dtype=float) / hp.lengthscales
    sq = np.sum(A**2, 1)[:, None] + np.sum(B**2, 1)[None, :] - 2.0 * A @ B.T
    np.maximum(sq, 0.0, out=sq)
    return hp.signal_std**2 * np.exp(-0.5 * sq)


def _factor_gram(K: np.ndarray, hp: ChannelHyperparams):
    """Cholesky of K + sn^2 I with adaptive jitter."""
    n = K.shape[0]
    Kt = K + hp.noise_std**2 * np.eye(n)
    try:
        return linalg.cho_factor(Kt, lower=True, check_finite=False)
    except linalg.LinAlgError:
        pass
    sf2 = hp.signal_std**2
    jitter = 1e-10 * sf2
    while jitter <= 1e-4 * sf2 * (1 + 1e-9):
        try:
            return linalg.cho_factor(Kt + jitter * np.eye(n), lower=True, check_finite=False)
        except linalg.LinAlgError:
            jitter *= 10.0
    cond = np.linalg.cond(Kt)
    raise NumericalError(
        f"Gram matrix not positive definite (n={n}, condition number {cond:.3e}, "
        f"noise_std={hp.noise_std:.3e}, signal_std={hp.signal_std:.3e})"
    )


class ConditionedGP:
    """GP posterior for all channels of one dataset (factorizations cached)."""

    def __init__(self, D: MismatchDataset, hp: GpHyperparams):
        if D.n_g and D.Z.shape[1] != hp.n_features:
            raise ConfigurationError(
                f"dataset has {D.Z.shape[1]} features, hyperparameters expect {hp.n_features}"
            )
        if D.n_g and D.Delta.shape[1] != hp.n_y:
            raise ConfigurationError(
                f"dataset has {D.Delta.shape[1]} output channels, hyperparameters have {hp.n_y}"
            )
        self.D = D
        self.hp = hp
        self._fac = []
        self._alpha = []
        for m, ch in enumerate(hp.channels):
            if D.n_g == 0:
                self._fac.append(None)
                self._alpha.append(None)
                continue
            fac = _factor_gram(kernel_matrix(D.Z, D.Z, ch), ch)
            self._fac.append(fac)
            self._alpha.append(linalg.cho_solve(fac, D.Delta[:, m], check_finite=False))

    def predict(self, Zq, grad: bool = False):
        """Posterior mean and variance at query rows.

        Returns ``mean, var`` with shape (n_q, n_y); with ``grad`` also their
        gradients wrt the query features, shape (n_q, n_y, n_features).
        """
        Zq = np.atleast_2d(np.asarray(Zq, dtype=float))
        nq, nz = Zq.shape
        ny = self.hp.n_y
        mean = np.zeros((nq, ny))
        var = np.empty((nq, ny))
        if grad:
            dmean = np.zeros((nq, ny, nz))
            dvar = np.zeros((nq, ny, nz))
        for m, ch in enumerate(self.hp.channels):
            sf2 = ch.signal_std**2
            if self.D.n_g == 0:
                var[:, m] = sf2
                continue
            Kq = kernel_matrix(Zq, self.D.Z, ch)
            mean[:, m] = Kq @ self._alpha[m]
            V = linalg.cho_solve(self._fac[m], Kq.T, check_finite=False)
            var[:, m] = np.maximum(sf2 - np.sum(Kq * V.T, axis=1), 0.0)
            if grad:
                inv_l2 = 1.0 / ch.lengthscales**2
                # d k(zq, zi)/d zq = -k * (zq - zi) / ell^2
                diff = Zq[:, None, :] - self.D.Z[None, :, :]
                dK = -Kq[:, :, None] * diff * inv_l2
                dmean[:, m, :] = np.einsum("qin,i->qn", dK, self._alpha[m])
                dvar[:, m, :] = -2.0 * np.einsum("qin,iq->qn", dK, V)
        if grad:
            return mean, var, dmean, dvar
        return mean, var


def posterior(z, D: MismatchDataset, hp: GpHyperparams):
    """Posterior mean and variance (per channel) at a single feature."""
    mean, var = ConditionedGP(D, hp).predict(np.asarray(z, dtype=float)[None, :])
    return mean[0], var[0]


# marginal likelihood -------------------------------------------------------


def _lml_and_grad(theta, Z, y):
    hp = ChannelHyperparams.from_log(theta)
    n = Z.shape[0]
    K = kernel_matrix(Z, Z, hp)
    Kt = K + hp.noise_std**2 * np.eye(n)
    try:
        fac = linalg.cho_factor(Kt, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise NumericalError(
            f"Gram matrix not positive definite in likelihood (n={n}, cond={np.linalg.cond(Kt):.3e})"
        ) from None
    alpha = linalg.cho_solve(fac, y, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(fac[0])))
    lml = -0.5 * y @ alpha - 0.5 * logdet - 0.5 * n * _LOG2PI

    Kinv = linalg.cho_solve(fac, np.eye(n), check_finite=False)
    M = np.outer(alpha, alpha) - Kinv
    g = np.empty_like(theta)
    g[0] = 0.5 * np.trace(M) * 2.0 * hp.noise_std**2
    g[1] = 0.5 * np.sum(M * K) * 2.0
    for i, ell in enumerate(hp.lengthscales):
        d2 = (Z[:, i][:, None] - Z[:, i][None, :]) ** 2 / ell**2
        g[2 + i] = 0.5 * np.sum(M * K * d2)
    return lml, g


def log_marginal_likelihood(D: MismatchDataset, hp, channel: int = 0, grad: bool = False):
    """Log evidence of channel ``channel`` of D under its hyperparameters.

    ``hp`` may be a GpHyperparams (indexed by channel) or ChannelHyperparams.
    With ``grad`` the gradient wrt [log sn, log sf, log ell...] is returned too.
    """
    if D.n_g == 0:
        raise ConfigurationError("log marginal likelihood needs a nonempty dataset")
    ch = hp[channel] if isinstance(hp, GpHyperparams) else hp
    lml, g = _lml_and_grad(ch.to_log(), D.Z, D.Delta[:, channel])
    return (lml, g) if grad else lml


def default_channel_hyperparams(Z, y) -> ChannelHyperparams:
    """Data-scaled starting point used by the optimizer."""
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    sy = float(np.std(y))
    if not sy > 0:
        sy = 1e-3
    ls = np.std(Z, axis=0)
    ls = np.where(ls > 0, ls, 1.0)
    return ChannelHyperparams(noise_std=0.1 * sy, signal_std=sy, lengthscales=ls)


def _lengthscale_floor(Z) -> np.ndarray:
    """Median nearest-neighbour spacing (in std-scaled features) per feature.

    Below this a lengthscale makes the kernel act like white noise on the
    training points, and signal and noise levels become interchangeable.
    """
    sd = np.std(Z, axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    Zs = Z / sd
    # duplicates (e.g. a run at rest) would give a zero spacing
    Zs = np.unique(Zs, axis=0)
    if Zs.shape[0] < 2:
        return sd * 1e-6
    d, _ = cKDTree(Zs).query(Zs, k=2)
    # capped so the data-scaled default start stays inside the bounds
    return np.clip(np.median(d[:, 1]), 1e-6, 0.5) * sd


def fit_hyperparams(D_train: MismatchDataset, n_starts: int = 4, seed: int = 0,
                    max_points: int | None = 400, maxiter: int = 200) -> GpHyperparams:
    """Maximize the log evidence per channel over log-hyperparameters.

    Start 0 is the data-scaled default; further starts perturb it randomly in
    log space. The best optimum is kept, and it is never worse than any start.
    ``max_points`` thins the training data evenly to bound the cubic cost.
    """
    if D_train.n_g < 5:
        raise ConfigurationError(f"need at least 5 training points, got {D_train.n_g}")
    Z, Delta = D_train.Z, D_train.Delta
    if max_points is not None and D_train.n_g > max_points:
        idx = np.unique(np.linspace(0, D_train.n_g - 1, max_points).round().astype(int))
        Z, Delta = Z[idx], Delta[idx]
    rng = np.random.default_rng(seed)
    ell_floor = _lengthscale_floor(Z)
    channels = []
    for m in range(Delta.shape[1]):
        y = Delta[:, m]
        init = default_channel_hyperparams(Z, y)
        if not np.any(y != 0.0):
            log.warning("channel %d observations are identically zero; using default hyperparameters", m)
            channels.append(init)
            continue
        theta0 = init.to_log()
        sy = float(np.std(y))
        ell_lo = np.maximum(theta0[2:] - math.log(1e3), np.log(ell_floor))
        lo = np.concatenate([[math.log(sy * 1e-6)], [math.log(sy * 1e-4)], ell_lo])
        hi = np.concatenate([[math.log(sy * 10)], [math.log(sy * 1e3)], theta0[2:] + math.log(1e3)])
        starts = [theta0]
        for _ in range(max(n_starts, 1) - 1):
            starts.append(np.clip(theta0 + rng.normal(0.0, 1.0, theta0.size), lo, hi))

        def negf(th):
            try:
                val, g = _lml_and_grad(th, Z, y)
            except NumericalError:
                return np.inf, np.zeros_like(th)
            return -val, -g

        best_theta, best_val = None, -np.inf
        diagnostics = []
        for i, th0 in enumerate(starts):
            f0, _ = negf(th0)
            try:
                res = optimize.minimize(negf, th0, jac=True, method="L-BFGS-B",
                                        bounds=list(zip(lo, hi)), options={"maxiter": maxiter})
                th, val = res.x, -res.fun
                msg = res.message
            except (ValueError, FloatingPointError) as exc:
                th, val, msg = th0, -np.inf, str(exc)
            # ascent contract: never return something worse than the start
            if not np.isfinite(val) or (np.isfinite(f0) and val < -f0):
                th, val = th0, -f0
            diagnostics.append({"start": i, "lml": float(val), "message": str(msg)})
            if np.isfinite(val) and val > best_val:
                best_theta, best_val = th, val
        if best_theta is None:
            raise FittingError(f"all {len(starts)} starts failed on channel {m}", diagnostics)
        log.debug("channel %d: best LML %.6g", m, best_val)
        channels.append(ChannelHyperparams.from_log(best_theta))
    return GpHyperparams(tuple(channels))


# datasets ----------------------------------------------------------------


def build_dataset(u, y, nominal_model: StateSpaceModel, s_traj=None, x0=None) -> MismatchDataset:
    """Features [x(t); u(t)] of the nominal simulation and mismatch
    observations y(t+1) - C(A x(t) + B u(t)), t = 0..n_i-1.

    ``y`` holds the measured outputs y(1..n_i) as an (n_i, n_y) array (or the
    lifted vector).
    """
    u = np.asarray(u, dtype=float).reshape(-1, nominal_model.n_u)
    y = np.asarray(y, dtype=float).reshape(-1, nominal_model.n_y)
    if u.shape[0] != y.shape[0]:
        raise ConfigurationError(f"input has {u.shape[0]} samples but output has {y.shape[0]}")
    x, y_nom = simulate_nominal(nominal_model, u, x0)
    Z = np.hstack([x[:-1], u])
    s = None
    if s_traj is not None:
        s = np.asarray(s_traj, dtype=float).reshape(-1)
        if s.size != u.shape[0]:
            raise ConfigurationError("path-parameter trajectory length must equal the run length")
    return MismatchDataset(Z, y - y_nom, s)


def window(D: MismatchDataset, alpha: int, a: int, b: int) -> MismatchDataset:
    """Rows alpha+a .. alpha+b (inclusive), clipped to the dataset."""
    if a > b:
        raise ConfigurationError(f"window offsets need a <= b, got a={a}, b={b}")
    lo = max(alpha + a, 0)
    hi = min(alpha + b, D.n_g - 1)
    if hi < lo:
        return MismatchDataset.empty(D.Z.shape[1], D.Delta.shape[1])
    sl = slice(lo, hi + 1)
    return MismatchDataset(D.Z[sl], D.Delta[sl], None if D.s_path is None else D.s_path[sl])


def nearest_path_index(s_query: float, s_path) -> int:
    """Index of the closest entry; ties resolve to the smaller index."""
    s_path = np.asarray(s_path, dtype=float)
    if s_path.size == 0:
        raise ConfigurationError("s_path is empty")
    return int(np.argmin(np.abs(s_path - s_query)))
