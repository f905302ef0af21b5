"""Norm-optimal ILC pre-step.

    v = u + W^{-1} (H^T Q e - S u),   W = H^T Q H + R + S

where e = r - y is the measured individual-axis error of the last run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from r2rlearn.errors import ConfigurationError, NumericalError
from r2rlearn.lti import LiftedSystem


def _spd_check(name, M):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigurationError(f"{name} must be square, got {M.shape}")
    if not np.allclose(M, M.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(M).max())):
        raise ConfigurationError(f"{name} must be symmetric")


@dataclass(frozen=True)
class IlcWeights:
    """Q (tracking), R (iteration variation), S (effort) and the cached W."""

    Q: np.ndarray
    R: np.ndarray
    S: np.ndarray
    H: np.ndarray = field(repr=False)
    W: np.ndarray = field(init=False, repr=False)
    _chol: tuple = field(init=False, repr=False)

    def __post_init__(self):
        Q, R, S, H = (np.asarray(a, dtype=float) for a in (self.Q, self.R, self.S, self.H))
        for name, M in (("Q", Q), ("R", R), ("S", S)):
            _spd_check(name, M)
        if Q.shape[0] != H.shape[0] or R.shape[0] != H.shape[1] or S.shape[0] != H.shape[1]:
            raise ConfigurationError(
                f"weight sizes Q{Q.shape} R{R.shape} S{S.shape} do not match H{H.shape}"
            )
        W = _weighted_gram(H, Q) + R + S
        W = 0.5 * (W + W.T)
        try:
            chol = linalg.cho_factor(W, lower=True, check_finite=False)
        except linalg.LinAlgError:
            eig = np.linalg.eigvalsh(W)
            raise NumericalError(
                f"W = H^T Q H + R + S is not positive definite (eigenvalues in "
                f"[{eig[0]:.3e}, {eig[-1]:.3e}]); check that R and S are positive definite"
            ) from None
        for name, M in (("Q", Q), ("R", R), ("S", S), ("H", H)):
            object.__setattr__(self, name, M)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def from_scalars(cls, lifted: LiftedSystem, q: float = 1.0, rho: float = 1e-2,
                     sigma: float = 1e-6) -> "IlcWeights":
        """Diagonal weights Q = q I, R = rho I, S = sigma I."""
        if not (q > 0 and rho > 0 and sigma > 0):
            raise ConfigurationError(f"ILC weights must be positive (q={q}, rho={rho}, sigma={sigma})")
        ny_n, nu_n = lifted.H.shape
        return cls(q * np.eye(ny_n), rho * np.eye(nu_n), sigma * np.eye(nu_n), lifted.H)

    def solve(self, b) -> np.ndarray:
        return linalg.cho_solve(self._chol, b, check_finite=False)


def _weighted_gram(H, Q):
    d = np.diag(Q)
    if np.count_nonzero(Q - np.diag(d)) == 0:
        return (H.T * d) @ H
    return H.T @ Q @ H


def norm_optimal_update(u_k, e_k, lifted: LiftedSystem, weights: IlcWeights) -> np.ndarray:
    u_k = np.asarray(u_k, dtype=float).reshape(-1)
    e_k = np.asarray(e_k, dtype=float).reshape(-1)
    H = lifted.H
    if u_k.size != H.shape[1] or e_k.size != H.shape[0]:
        raise ConfigurationError(
            f"lifted input ({u_k.size}) / error ({e_k.size}) do not match H {H.shape}"
        )
    if weights.H.shape != H.shape:
        raise ConfigurationError("weights were built for a different lifted system")
    rhs = H.T @ (weights.Q @ e_k) - weights.S @ u_k
    return u_k + weights.solve(rhs)


def contraction_ratio(weights: IlcWeights) -> float:
    """||I - W^{-1}(H^T Q H + S)||_2 for the noiseless, mismatch-free plant."""
    H = weights.H
    M = np.eye(H.shape[1]) - weights.solve(_weighted_gram(H, weights.Q) + weights.S)
    return float(np.linalg.norm(M, 2))


def fixed_point(lifted: LiftedSystem, weights: IlcWeights, r) -> np.ndarray:
    """(H^T Q H + S)^{-1} H^T Q r: the limit on the mismatch-free plant."""
    H = lifted.H
    A = _weighted_gram(H, weights.Q) + weights.S
    return linalg.solve(A, H.T @ (weights.Q @ np.asarray(r, dtype=float).reshape(-1)), assume_a="pos")
