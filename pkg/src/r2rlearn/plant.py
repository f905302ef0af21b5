"""Simulated "true" system: truth dynamics, output perturbation and noise.

The measured output of one run is

    y(t+1) = S * y_truth(t+1) + g(x_nom(t), u(t)) + w(t)

where ``S`` is the output selector, ``g`` the systematic perturbation
(evaluated along the *nominal* state trajectory) and ``w`` i.i.d. Gaussian
noise with diagonal covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from r2rlearn.errors import ConfigurationError
from r2rlearn.lti import StateSpaceModel, simulate_nominal

PERTURBATION_KINDS = ("none", "affine-output", "smooth-nonlinear")


@dataclass(frozen=True)
class PerturbationSpec:
    """Output perturbation g(x, u).

    kind ``affine-output``: g = gain @ [x; u] + offset
    kind ``smooth-nonlinear``: g_m = amplitude_m * sin(frequency_m * weights_m . [x; u])
    """

    kind: str = "none"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ConfigurationError(f"unknown perturbation kind {self.kind!r}; expected one of {PERTURBATION_KINDS}")
        params = {k: np.asarray(v, dtype=float) for k, v in dict(self.params).items()}
        need = {
            "none": (),
            "affine-output": ("gain", "offset"),
            "smooth-nonlinear": ("amplitude", "frequency", "weights"),
        }[self.kind]
        for key in need:
            if key not in params:
                raise ConfigurationError(f"perturbation kind {self.kind!r} needs parameter {key!r}")
        for key, val in params.items():
            if not np.all(np.isfinite(val)):
                raise ConfigurationError(f"perturbation parameter {key!r} must be finite")
        if self.kind == "smooth-nonlinear":
            params["amplitude"] = params["amplitude"].reshape(-1)
            params["frequency"] = params["frequency"].reshape(-1)
            params["weights"] = np.atleast_2d(params["weights"])
        if self.kind == "affine-output":
            params["gain"] = np.atleast_2d(params["gain"])
            params["offset"] = params["offset"].reshape(-1)
        object.__setattr__(self, "params", params)

    def evaluate(self, X, U, n_y: int) -> np.ndarray:
        """g for each row of [X, U]; returns (n, n_y)."""
        Zf = np.hstack([np.atleast_2d(X), np.atleast_2d(U)])
        if self.kind == "none":
            return np.zeros((Zf.shape[0], n_y))
        p = self.params
        if self.kind == "affine-output":
            if p["gain"].shape != (n_y, Zf.shape[1]) or p["offset"].size != n_y:
                raise ConfigurationError(
                    f"affine perturbation needs gain ({n_y}, {Zf.shape[1]}) and offset ({n_y},)"
                )
            return Zf @ p["gain"].T + p["offset"]
        if p["weights"].shape != (n_y, Zf.shape[1]) or p["amplitude"].size != n_y or p["frequency"].size != n_y:
            raise ConfigurationError(
                f"smooth-nonlinear perturbation needs weights ({n_y}, {Zf.shape[1]}), "
                f"amplitude ({n_y},) and frequency ({n_y},)"
            )
        return p["amplitude"] * np.sin(p["frequency"] * (Zf @ p["weights"].T))

    def to_dict(self) -> dict:
        return {"kind": self.kind, **{k: v.tolist() for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbationSpec":
        d = dict(d)
        kind = d.pop("kind", "none")
        return cls(kind, d)

    def __eq__(self, other):
        if not isinstance(other, PerturbationSpec):
            return NotImplemented
        return self.kind == other.kind and self.params.keys() == other.params.keys() and all(
            np.array_equal(v, other.params[k]) for k, v in self.params.items()
        )

    __hash__ = None


@dataclass(frozen=True)
class TruePlant:
    truth_model: StateSpaceModel
    output_selector: np.ndarray
    perturbation: PerturbationSpec
    noise_std: np.ndarray
    rng_seed: int = 0
    repeatable_noise: bool = False

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.output_selector, dtype=float))
        if S.shape[1] != self.truth_model.n_y:
            raise ConfigurationError(
                f"output_selector has {S.shape[1]} columns, truth model has {self.truth_model.n_y} outputs"
            )
        noise = np.asarray(self.noise_std, dtype=float).reshape(-1)
        if noise.size == 1:
            noise = np.full(S.shape[0], float(noise[0]))
        if noise.size != S.shape[0]:
            raise ConfigurationError(f"noise_std needs {S.shape[0]} entries, got {noise.size}")
        if np.any(noise < 0) or not np.all(np.isfinite(noise)):
            raise ConfigurationError("noise_std must be finite and >= 0")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ConfigurationError("rng_seed must fit in 64 bits")
        S.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "output_selector", S)
        object.__setattr__(self, "noise_std", noise)
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    @property
    def n_y(self) -> int:
        return self.output_selector.shape[0]

    def with_(self, **changes) -> "TruePlant":
        from dataclasses import replace

        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, TruePlant):
            return NotImplemented
        return (
            self.truth_model == other.truth_model
            and np.array_equal(self.output_selector, other.output_selector)
            and self.perturbation == other.perturbation
            and np.array_equal(self.noise_std, other.noise_std)
            and self.rng_seed == other.rng_seed
            and self.repeatable_noise == other.repeatable_noise
        )

    __hash__ = None


def noise_samples(plant: TruePlant, seed_offset: int, n_i: int) -> np.ndarray:
    """w(t), t = 0..n_i-1, from a stream keyed by (rng_seed, seed_offset).

    Sample t of a stream does not depend on n_i, so replays with the same key
    are bit-identical.
    """
    if plant.repeatable_noise:
        seed_offset = 0
    bitgen = np.random.Philox(key=[plant.rng_seed, int(seed_offset) % 2**64])
    z = np.random.Generator(bitgen).standard_normal((n_i, plant.n_y))
    return z * plant.noise_std


def run_iteration(plant: TruePlant, u, nominal_model: StateSpaceModel, seed_offset: int = 0) -> np.ndarray:
    """Apply ``u`` (n_i, n_u) to the true system; returns y(1..n_i), (n_i, n_y)."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, nominal_model.n_u)
    if u.shape[1] != plant.truth_model.n_u or u.shape[1] != nominal_model.n_u:
        raise ConfigurationError(
            f"input has {u.shape[1]} channels; truth model expects {plant.truth_model.n_u}, "
            f"nominal model {nominal_model.n_u}"
        )
    if nominal_model.n_y != plant.n_y:
        raise ConfigurationError("nominal model and plant disagree on the number of outputs")
    _, y_truth = simulate_nominal(plant.truth_model, u)
    x_nom, _ = simulate_nominal(nominal_model, u)
    y = y_truth @ plant.output_selector.T
    y = y + plant.perturbation.evaluate(x_nom[:-1], u, plant.n_y)
    if np.any(plant.noise_std > 0):
        y = y + noise_samples(plant, seed_offset, u.shape[0])
    return y
