"""Discrete LTI models, time-domain simulation and lifted operators.

Lifted vectors are stacked time-major: a trajectory with shape ``(n_i, n)``
maps to ``traj.reshape(-1)``, i.e. ``[y(1); y(2); ...; y(n_i)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from r2rlearn.errors import ConfigurationError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpaceModel:
    """x(t+1) = A x(t) + B u(t), nominal output y(t+1) = C x(t+1)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigurationError(f"A must be square, got shape {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ConfigurationError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
        if C.shape[1] != A.shape[0]:
            raise ConfigurationError(f"C has {C.shape[1]} columns, expected {A.shape[0]}")
        for name, m in (("A", A), ("B", B), ("C", C)):
            if not np.all(np.isfinite(m)):
                raise ConfigurationError(f"{name} contains non-finite entries")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def __eq__(self, other):
        if not isinstance(other, StateSpaceModel):
            return NotImplemented
        return (
            np.array_equal(self.A, other.A)
            and np.array_equal(self.B, other.B)
            and np.array_equal(self.C, other.C)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpaceModel":
        return cls(d["A"], d["B"], d["C"])


def block_diag_models(*models: StateSpaceModel) -> StateSpaceModel:
    """Decoupled parallel connection (one model per axis)."""
    from scipy.linalg import block_diag

    return StateSpaceModel(
        block_diag(*[m.A for m in models]),
        block_diag(*[m.B for m in models]),
        block_diag(*[m.C for m in models]),
    )


def _as_inputs(model: StateSpaceModel, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        if model.n_u == 1:
            u = u[:, None]
        elif u.size % model.n_u == 0:
            u = u.reshape(-1, model.n_u)
    if u.ndim != 2 or u.shape[1] != model.n_u:
        raise ConfigurationError(
            f"input trajectory shape {u.shape} does not match n_u={model.n_u}"
        )
    return u


def simulate_nominal(model: StateSpaceModel, u, x0=None):
    """Step the nominal model through an input trajectory.

    Parameters
    ----------
    u : array, shape (n_i, n_u) (or lifted, length n_i*n_u)
    x0 : initial state, defaults to zero.

    Returns
    -------
    x : (n_i + 1, n_x) states x(0..n_i)
    y : (n_i, n_y) nominal outputs y(1..n_i)
    """
    u = _as_inputs(model, u)
    n_i = u.shape[0]
    x = np.zeros((n_i + 1, model.n_x))
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        if x0.shape != (model.n_x,):
            raise ConfigurationError(f"x0 has shape {x0.shape}, expected ({model.n_x},)")
        if not np.all(np.isfinite(x0)):
            raise ConfigurationError("x0 contains non-finite entries")
        x[0] = x0
    A, B = model.A, model.B
    for t in range(n_i):
        x[t + 1] = A @ x[t] + B @ u[t]
    y = x[1:] @ model.C.T
    return x, y


@dataclass(frozen=True)
class LiftedSystem:
    """Stacked map y = H u + Hbar x0 over a fixed iteration length."""

    H: np.ndarray
    Hbar: np.ndarray
    n_i: int
    n_u: int = field(default=1)
    n_y: int = field(default=1)

    def apply(self, u, x0=None) -> np.ndarray:
        y = self.H @ np.asarray(u, dtype=float).reshape(-1)
        if x0 is not None:
            y = y + self.Hbar @ np.asarray(x0, dtype=float).reshape(-1)
        return y


def markov_parameters(model: StateSpaceModel, n: int) -> np.ndarray:
    """C A^k B for k = 0..n-1, shape (n, n_y, n_u)."""
    out = np.empty((n, model.n_y, model.n_u))
    AkB = model.B.copy()
    for k in range(n):
        out[k] = model.C @ AkB
        AkB = model.A @ AkB
    return out


def build_lifted(model: StateSpaceModel, n_i: int) -> LiftedSystem:
    if int(n_i) != n_i or n_i < 1:
        raise ConfigurationError(f"iteration length must be a positive integer, got {n_i}")
    n_i = int(n_i)
    ny, nu, nx = model.n_y, model.n_u, model.n_x
    markov = markov_parameters(model, n_i)
    # block (i, j) = markov[i - j], zero above the block diagonal
    lag = np.subtract.outer(np.arange(n_i), np.arange(n_i))
    blocks = markov[np.clip(lag, 0, None)] * (lag >= 0)[:, :, None, None]
    H = np.ascontiguousarray(blocks.transpose(0, 2, 1, 3).reshape(n_i * ny, n_i * nu))
    Hbar = np.empty((n_i * ny, nx))
    CAk = model.C @ model.A
    for i in range(n_i):
        Hbar[i * ny:(i + 1) * ny] = CAk
        CAk = CAk @ model.A
    H.setflags(write=False)
    Hbar.setflags(write=False)
    return LiftedSystem(H=H, Hbar=Hbar, n_i=n_i, n_u=nu, n_y=ny)
