"""Synthetic two-model benchmark.

Per axis the nominal controller model is a ZOH-discretized second-order
position servo; the truth model adds a lightly damped structural mode and has
a shifted servo bandwidth. The two truth outputs leak slightly into each
other through the output selector, and a smooth position-dependent output
perturbation (a stand-in for e.g. encoder or guide errors) is added on top.
All units are mm and seconds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from r2rlearn.lti import StateSpaceModel, block_diag_models
from r2rlearn.ocp import OcpConfig
from r2rlearn.path import ReferencePath, octagon_waypoints
from r2rlearn.plant import PerturbationSpec, TruePlant

T_SAMPLE = 0.01

# nominal servo per axis
NOM_FREQ_HZ = 8.0
NOM_DAMPING = 0.8
# truth servo per axis (x, y) and structural mode
TRUTH_FREQ_HZ = (5.5, 6.0)
TRUTH_DAMPING = (0.7, 0.75)
MODE_FREQ_HZ = (35.0, 38.0)
MODE_DAMPING = (0.5, 0.5)
CROSS_COUPLING = 5e-4
# smooth output perturbation g_m = a_m sin(f_m * w_m . [x; u])
PERT_AMPLITUDE = (0.004, 0.004)
PERT_FREQUENCY = (2 * np.pi / 5.0, 2 * np.pi / 5.0)
NOISE_STD = 0.001
# reference
OCTAGON_WIDTH = 20.0
OCTAGON_CHAMFER = 6.0
CORNER_RADIUS = 1.0
N_SAMPLES = 400


@dataclass(frozen=True)
class ControllerSettings:
    """Everything the run-to-run loop needs besides plant, model and path."""

    n_i: int = N_SAMPLES
    ilc_q: float = 1.0
    ilc_rho: float = 0.3
    ilc_sigma: float = 4e-4
    epsilon: float = 1e-6
    k_max: int = 12
    ocp: OcpConfig = field(default_factory=OcpConfig)
    fgpr_horizon: int = 10
    hp_starts: int = 16

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "ocp"}
        d["ocp"] = self.ocp.to_dict()
        return d


def _servo(freq_hz, damping, T):
    w = 2 * np.pi * freq_hz
    return signal.TransferFunction([w * w], [1.0, 2 * damping * w, w * w])


def _discretize_tf(num, den, T) -> StateSpaceModel:
    A, B, C, D, _ = signal.cont2discrete(signal.tf2ss(num, den), T, method="zoh")
    if np.any(np.abs(D) > 1e-12):
        raise AssertionError("benchmark models must be strictly proper")
    return StateSpaceModel(A, B, C)


def axis_nominal(T=T_SAMPLE) -> StateSpaceModel:
    """States [position (mm), velocity (mm/s)]."""
    w = 2 * np.pi * NOM_FREQ_HZ
    Ac = np.array([[0.0, 1.0], [-w * w, -2 * NOM_DAMPING * w]])
    Bc = np.array([[0.0], [w * w]])
    Cc = np.array([[1.0, 0.0]])
    A, B, C, _, _ = signal.cont2discrete((Ac, Bc, Cc, np.zeros((1, 1))), T, method="zoh")
    return StateSpaceModel(A, B, C)


def axis_truth(axis: int, T=T_SAMPLE) -> StateSpaceModel:
    servo = _servo(TRUTH_FREQ_HZ[axis], TRUTH_DAMPING[axis], T)
    mode = _servo(MODE_FREQ_HZ[axis], MODE_DAMPING[axis], T)
    num = np.polymul(servo.num, mode.num)
    den = np.polymul(servo.den, mode.den)
    return _discretize_tf(num, den, T)


def default_benchmark(seed: int = 0):
    """(nominal model, true plant, reference path, controller settings)."""
    nominal = block_diag_models(axis_nominal(), axis_nominal())
    truth = block_diag_models(axis_truth(0), axis_truth(1))
    selector = np.array([[1.0, CROSS_COUPLING], [-CROSS_COUPLING, 1.0]])
    nz = nominal.n_x + nominal.n_u
    # g depends on the nominal position of each axis (C picks it out of x)
    weights = np.zeros((2, nz))
    weights[:, : nominal.n_x] = nominal.C
    pert = PerturbationSpec(
        "smooth-nonlinear",
        {"amplitude": list(PERT_AMPLITUDE), "frequency": list(PERT_FREQUENCY), "weights": weights.tolist()},
    )
    plant = TruePlant(truth, selector, pert, [NOISE_STD, NOISE_STD], rng_seed=seed)
    path = ReferencePath(octagon_waypoints(OCTAGON_WIDTH, OCTAGON_CHAMFER), closed=True,
                         corner_radius=CORNER_RADIUS)
    n_i = N_SAMPLES
    ocp = OcpConfig(N=20, lam=0.5, Q_e=((100.0, 0.0), (0.0, 10.0)), gamma=0.0,
                    phi_max=3.0 / (n_i * T_SAMPLE), n_w=50, trust_radius=0.005, T=T_SAMPLE)
    return nominal, plant, path, ControllerSettings(n_i=n_i, ocp=ocp)

