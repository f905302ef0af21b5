"""Run-to-run loop: apply, measure, ILC pre-step, dataset refresh, proximal step."""

from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from r2rlearn import path as pathmod
from r2rlearn.benchmark import ControllerSettings
from r2rlearn.errors import ConfigurationError, RunError
from r2rlearn.gpr import GpHyperparams, MismatchDataset, build_dataset, fit_hyperparams
from r2rlearn.ilc import IlcWeights, fixed_point, norm_optimal_update
from r2rlearn.lti import StateSpaceModel, build_lifted
from r2rlearn.ocp import nominal_s_plan, realized_cost, solve_receding_horizon
from r2rlearn.plant import TruePlant, run_iteration

log = logging.getLogger(__name__)

ITERATION_COLUMNS = ("k", "rms_contour", "rms_axis", "realized_cost", "input_delta")
SUMMARY_COLUMNS = ("seed", "controller", "iterations", "rms_initial", "rms_converged", "improvement_pct")


class ControllerKind(str, enum.Enum):
    FF = "ff"
    ILC = "ilc"
    AGPR = "agpr"
    FGPR = "fgpr"

    @classmethod
    def parse(cls, name) -> "ControllerKind":
        if isinstance(name, ControllerKind):
            return name
        try:
            return cls(str(name).strip().lower().replace("-", ""))
        except ValueError:
            raise ConfigurationError(
                f"unknown controller {name!r}; expected one of {[k.value for k in cls]}"
            ) from None


@dataclass(frozen=True)
class Scenario:
    nominal: StateSpaceModel
    plant: TruePlant
    path: pathmod.ReferencePath
    settings: ControllerSettings
    hp: GpHyperparams | None = None   # None: fit on the first run's data

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, plant=self.plant.with_(rng_seed=int(seed)))


@dataclass
class RunRecord:
    k: int
    u_k: np.ndarray          # (n_i, n_u)
    y_k: np.ndarray          # (n_i, n_y)
    s_k: np.ndarray          # (n_i + 1,)
    rms_contour: float
    rms_axis: float
    realized_cost: float
    input_delta: float

    def row(self):
        return (self.k, self.rms_contour, self.rms_axis, self.realized_cost, self.input_delta)


@dataclass
class RunResult:
    kind: ControllerKind
    records: list
    hp: GpHyperparams | None
    diagnostics: list = field(default_factory=list)   # (k, StepDiagnostic)

    def rms_series(self) -> np.ndarray:
        return np.array([r.rms_contour for r in self.records])

    def converged_rms(self, last: int = 3) -> float:
        return float(np.mean(self.rms_series()[-last:]))

    def improvement_pct(self) -> float:
        rms0 = self.records[0].rms_contour
        return 100.0 * (rms0 - self.converged_rms()) / rms0


def rms_contour(y, path: pathmod.ReferencePath) -> float:
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    _, ec = pathmod.project(path, y)
    return float(np.sqrt(np.mean(np.square(ec))))


def rms_axis(y, r) -> float:
    """RMS over t of the Euclidean individual-axis error ||r(t) - y(t)||."""
    e = np.asarray(r, dtype=float).reshape(-1) - np.asarray(y, dtype=float).reshape(-1)
    n = e.size // 2
    return float(np.sqrt(np.sum(e * e) / n))


def _ilc_weights(scn: Scenario, lifted):
    cs = scn.settings
    return IlcWeights.from_scalars(lifted, cs.ilc_q, cs.ilc_rho, cs.ilc_sigma)


def nominal_input(scn: Scenario, lifted=None, weights=None) -> np.ndarray:
    """Regularized nominal inverse of the discretized reference, (n_i, n_u)."""
    n_i = scn.settings.n_i
    lifted = lifted or build_lifted(scn.nominal, n_i)
    weights = weights or _ilc_weights(scn, lifted)
    r = pathmod.discretize(scn.path, n_i)
    return fixed_point(lifted, weights, r).reshape(n_i, scn.nominal.n_u)


def _dataset(scn, u, y, s):
    return build_dataset(u, y, scn.nominal, s_traj=s[:-1])


def fit_scenario_hyperparams(scn: Scenario, u0=None, seed_offset: int = 0) -> tuple:
    """Excitation run with u0 and a hyperparameter fit on its data."""
    n_i = scn.settings.n_i
    u0 = nominal_input(scn) if u0 is None else u0
    y0 = run_iteration(scn.plant, u0, scn.nominal, seed_offset)
    D0 = _dataset(scn, u0, y0, nominal_s_plan(scn.path, n_i))
    return fit_hyperparams(D0, n_starts=scn.settings.hp_starts, seed=0), D0


def run(scn: Scenario, kind, u0=None, ilc_prestep: bool = True, hp: GpHyperparams | None = None,
        k_max: int | None = None, epsilon: float | None = None) -> RunResult:
    """Run the loop for one controller.

    ``ilc_prestep=False`` skips the ILC update so the proximal step acts on
    v = u_k directly (only meaningful for AGPR/FGPR).
    """
    kind = ControllerKind.parse(kind)
    cs = scn.settings
    n_i, nu = cs.n_i, scn.nominal.n_u
    k_max = cs.k_max if k_max is None else int(k_max)
    epsilon = cs.epsilon if epsilon is None else float(epsilon)
    if k_max < 0:
        raise ConfigurationError("k_max must be >= 0")
    lifted = build_lifted(scn.nominal, n_i)
    weights = _ilc_weights(scn, lifted)
    r = pathmod.discretize(scn.path, n_i)
    u = nominal_input(scn, lifted, weights) if u0 is None else np.asarray(u0, dtype=float).reshape(n_i, nu)
    s = nominal_s_plan(scn.path, n_i)
    hp = hp or scn.hp
    ocp_cfg = cs.ocp
    if kind is ControllerKind.FGPR:
        ocp_cfg = replace(ocp_cfg, N=min(ocp_cfg.N, cs.fgpr_horizon))
    approx = None
    records, diags = [], []
    k = 0
    while True:
        y = run_iteration(scn.plant, u, scn.nominal, seed_offset=k)
        D = _dataset(scn, u, y, s)
        if hp is None:
            hp = fit_hyperparams(D, n_starts=cs.hp_starts, seed=0)
        J = realized_cost(scn.nominal, u, y, s, D, hp, scn.path, ocp_cfg)
        e = r - y.reshape(-1)

        if kind is ControllerKind.FF:
            u_next, s_next = u, s
        else:
            v = u.reshape(-1)
            if kind is ControllerKind.ILC or ilc_prestep:
                v = norm_optimal_update(u, e, lifted, weights)
            v = v.reshape(n_i, nu)
            if kind is ControllerKind.ILC:
                u_next, s_next = v, s
            else:
                if approx is None:
                    approx = (v, nominal_s_plan(scn.path, n_i))
                try:
                    sweep = solve_receding_horizon(scn.nominal, D, hp, scn.path, v, approx[0], approx[1],
                                                   ocp_cfg, full_gp=kind is ControllerKind.FGPR)
                except RunError as exc:
                    raise RunError(str(exc), iteration=k) from exc
                u_next, s_next = sweep.u, sweep.s
                approx = (u_next, s_next)
                diags.extend((k, d) for d in sweep.diagnostics)
        delta = float(np.linalg.norm(u_next - u))
        records.append(RunRecord(k, u, y, s, rms_contour(y, scn.path), rms_axis(y, r), J, delta))
        log.info("%s k=%d rms_contour=%.6g delta=%.3g", kind.value, k, records[-1].rms_contour, delta)
        # FF never changes its input, so only the iteration cap stops it
        if k >= k_max or (delta < epsilon and kind is not ControllerKind.FF):
            break
        u, s = u_next, s_next
        k += 1
    return RunResult(kind, records, hp, diags)


def compare_controllers(scn: Scenario, kinds, seed: int, hp: GpHyperparams | None = None) -> tuple:
    """Run each controller on the same seed; returns (summary rows, results).

    All controllers start from the same u0, so their first runs (and the
    hyperparameters fitted on it) coincide; noise at iteration k is shared.
    """
    scn = scn.with_seed(seed)
    u0 = nominal_input(scn)
    if hp is None and scn.hp is None:
        hp, _ = fit_scenario_hyperparams(scn, u0)
    results = {}
    rows = []
    for kind in kinds:
        kind = ControllerKind.parse(kind)
        res = run(scn, kind, u0=u0, hp=hp)
        results[kind] = res
        rows.append({
            "seed": int(seed),
            "controller": kind.value.upper() if kind is not ControllerKind.AGPR else "A-GPR",
            "iterations": len(res.records),
            "rms_initial": res.records[0].rms_contour,
            "rms_converged": res.converged_rms(),
            "improvement_pct": res.improvement_pct(),
        })
        if kind is ControllerKind.FGPR:
            rows[-1]["controller"] = "F-GPR"
    return rows, results


# CSV output ------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(fh, header, rows) -> None:
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def iteration_csv(result: RunResult) -> str:
    buf = io.StringIO()
    write_csv(buf, ITERATION_COLUMNS, (r.row() for r in result.records))
    return buf.getvalue()


def summary_csv(rows) -> str:
    buf = io.StringIO()
    write_csv(buf, SUMMARY_COLUMNS, ([row[c] for c in SUMMARY_COLUMNS] for row in rows))
    return buf.getvalue()


def plot_data_csv(results: dict) -> str:
    """Iteration vs contour RMS, one column per controller (ragged runs padded
    with their last value)."""
    kinds = list(results)
    n = max(len(results[k].records) for k in kinds)
    buf = io.StringIO()
    rows = []
    for i in range(n):
        row = [i]
        for k in kinds:
            rs = results[k].records
            row.append(rs[min(i, len(rs) - 1)].rms_contour)
        rows.append(row)
    write_csv(buf, ["k"] + [k.value for k in kinds], rows)
    return buf.getvalue()


def diagnostics_csv(result: RunResult) -> str:
    buf = io.StringIO()
    cols = ("k", "t", "alpha", "n_window", "status", "qp_iterations", "kkt_residual", "fallback", "sqp_iterations")
    write_csv(buf, cols, (
        (k, d.t, d.alpha, d.n_window, d.status, d.qp_iterations, d.kkt_residual, int(d.fallback), d.sqp_iterations)
        for k, d in result.diagnostics
    ))
    return buf.getvalue()


def trajectory_csv(result: RunResult, path: pathmod.ReferencePath) -> str:
    """Reference and final measured trajectory."""
    rec = result.records[-1]
    n_i = rec.y_k.shape[0]
    r = pathmod.discretize(path, n_i).reshape(-1, 2)
    buf = io.StringIO()
    write_csv(buf, ("t", "r1", "r2", "y1", "y2"),
              ((t + 1, r[t, 0], r[t, 1], rec.y_k[t, 0], rec.y_k[t, 1]) for t in range(n_i)))
    return buf.getvalue()
