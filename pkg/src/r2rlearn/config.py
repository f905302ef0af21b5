"""YAML run configuration.

Sections mirror the modules: ``nominal`` (lti model), ``plant``, ``path``,
``ilc``, ``ocp``, ``gpr`` and ``r2r``, plus ``output``. Unknown keys are
rejected and every error carries the dotted key and, when known, the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from r2rlearn.benchmark import ControllerSettings, default_benchmark
from r2rlearn.errors import ConfigurationError
from r2rlearn.gpr import GpHyperparams
from r2rlearn.lti import StateSpaceModel
from r2rlearn.ocp import OcpConfig
from r2rlearn.path import ReferencePath
from r2rlearn.plant import PerturbationSpec, TruePlant
from r2rlearn.r2r import ControllerKind, Scenario


class ConfigError(ConfigurationError):
    """Configuration problem located at a dotted key (and line, if known)."""

    def __init__(self, message, key=None, line=None, source=None):
        self.key, self.line, self.source = key, line, source
        where = ""
        if source or line:
            where = f"{source or '<config>'}:{line}: " if line else f"{source}: "
        super().__init__(f"{where}{key + ': ' if key else ''}{message}")


class _Loader(yaml.SafeLoader):
    pass


# plain YAML 1.1 wants a dot in floats; accept 1e-6 as well
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                  |\.[0-9_]+(?:[eE][-+][0-9]+)?
                  |[-+]?\.(?:inf|Inf|INF)
                  |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def _line_map(node, prefix="", out=None) -> dict:
    """Dotted key -> 1-based line of its value node."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[key] = k.start_mark.line + 1
            _line_map(v, key, out)
    return out


SECTIONS = {
    "nominal": {"A", "B", "C"},
    "plant": {"truth_model", "output_selector", "perturbation", "noise_std", "repeatable_noise"},
    "path": {"waypoints", "closed", "corner_radius"},
    "ilc": {"q", "rho", "sigma"},
    "ocp": set(OcpConfig.__dataclass_fields__),
    "gpr": {"hyperparameters", "fit", "lml"},
    "r2r": {"controller", "seed", "epsilon", "k_max", "n_i", "fgpr_horizon"},
    "output": {"dir", "svg"},
}
REQUIRED = ("nominal", "plant", "path")


@dataclass(frozen=True)
class RunConfig:
    nominal: StateSpaceModel
    plant: TruePlant               # rng_seed is taken from ``seed``
    path: ReferencePath
    controller: ControllerKind = ControllerKind.AGPR
    ilc_q: float = 1.0
    ilc_rho: float = 0.3
    ilc_sigma: float = 4e-4
    ocp: OcpConfig = field(default_factory=OcpConfig)
    hp: GpHyperparams | None = None
    fit_starts: int = 16
    lml: tuple | None = None       # informational, written by fit-hypers
    seed: int = 0
    epsilon: float = 1e-6
    k_max: int = 12
    n_i: int = 400
    fgpr_horizon: int = 10
    output_dir: str = "out"
    svg: bool = False

    def __post_init__(self):
        object.__setattr__(self, "controller", ControllerKind.parse(self.controller))
        if self.n_i < 1:
            raise ConfigurationError("r2r.n_i must be >= 1")
        if self.k_max < 0:
            raise ConfigurationError("r2r.k_max must be >= 0")
        if self.epsilon < 0:
            raise ConfigurationError("r2r.epsilon must be >= 0")
        if self.fit_starts < 1:
            raise ConfigurationError("gpr.fit.starts must be >= 1")
        if self.fgpr_horizon < 1:
            raise ConfigurationError("r2r.fgpr_horizon must be >= 1")
        if self.seed < 0:
            raise ConfigurationError("r2r.seed must be >= 0")
        if self.nominal.n_u != 2 or self.nominal.n_y != 2:
            raise ConfigurationError("nominal model must have 2 inputs and 2 outputs")
        if self.plant.n_y != self.nominal.n_y:
            raise ConfigurationError(
                f"plant produces {self.plant.n_y} outputs, nominal model has {self.nominal.n_y}"
            )
        if self.plant.truth_model.n_u != self.nominal.n_u:
            raise ConfigurationError("truth and nominal model input counts differ")
        if self.hp is not None and len(self.hp.channels) != self.nominal.n_y:
            raise ConfigurationError(f"gpr.hyperparameters needs {self.nominal.n_y} channels")
        object.__setattr__(self, "plant", self.plant.with_(rng_seed=int(self.seed)))

    def settings(self) -> ControllerSettings:
        return ControllerSettings(
            n_i=self.n_i, ilc_q=self.ilc_q, ilc_rho=self.ilc_rho, ilc_sigma=self.ilc_sigma,
            epsilon=self.epsilon, k_max=self.k_max, ocp=self.ocp,
            fgpr_horizon=self.fgpr_horizon, hp_starts=self.fit_starts,
        )

    def scenario(self) -> Scenario:
        return Scenario(self.nominal, self.plant, self.path, self.settings(), self.hp)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        gpr: dict = {"fit": {"starts": int(self.fit_starts)}}
        if self.hp is not None:
            gpr["hyperparameters"] = self.hp.to_dict()
        if self.lml is not None:
            gpr["lml"] = [float(v) for v in self.lml]
        return {
            "nominal": self.nominal.to_dict(),
            "plant": {
                "truth_model": self.plant.truth_model.to_dict(),
                "output_selector": self.plant.output_selector.tolist(),
                "perturbation": self.plant.perturbation.to_dict(),
                "noise_std": self.plant.noise_std.tolist(),
                "repeatable_noise": bool(self.plant.repeatable_noise),
            },
            "path": {
                "waypoints": self.path.waypoints.tolist(),
                "closed": bool(self.path.closed),
                "corner_radius": float(self.path.corner_radius),
            },
            "ilc": {"q": float(self.ilc_q), "rho": float(self.ilc_rho), "sigma": float(self.ilc_sigma)},
            "ocp": self.ocp.to_dict(),
            "gpr": gpr,
            "r2r": {
                "controller": self.controller.value,
                "seed": int(self.seed),
                "epsilon": float(self.epsilon),
                "k_max": int(self.k_max),
                "n_i": int(self.n_i),
                "fgpr_horizon": int(self.fgpr_horizon),
            },
            "output": {"dir": str(self.output_dir), "svg": bool(self.svg)},
        }

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None, width=100)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def default_config(seed: int = 0) -> RunConfig:
    """The synthetic benchmark as a RunConfig."""
    nominal, plant, path, cs = default_benchmark(seed)
    return RunConfig(
        nominal=nominal, plant=plant, path=path, ilc_q=cs.ilc_q, ilc_rho=cs.ilc_rho,
        ilc_sigma=cs.ilc_sigma, ocp=cs.ocp, fit_starts=cs.hp_starts, seed=seed,
        epsilon=cs.epsilon, k_max=cs.k_max, n_i=cs.n_i, fgpr_horizon=cs.fgpr_horizon,
    )


class _Ctx:
    def __init__(self, lines, source):
        self.lines, self.source = lines, source

    def error(self, key, message):
        line = self.lines.get(key)
        # a missing key points at its nearest existing parent
        probe = key
        while line is None and probe and "." in probe:
            probe = probe.rsplit(".", 1)[0]
            line = self.lines.get(probe)
        return ConfigError(message, key=key, line=line, source=self.source)

    def section(self, data, name, required=False) -> dict:
        if name not in data or data[name] is None:
            if required:
                raise self.error(name, "required section missing")
            return {}
        sec = data[name]
        if not isinstance(sec, dict):
            raise self.error(name, "expected a mapping")
        unknown = sorted(set(sec) - SECTIONS[name])
        if unknown:
            raise self.error(f"{name}.{unknown[0]}", f"unknown key (allowed: {sorted(SECTIONS[name])})")
        return sec

    def need(self, sec, prefix, key):
        if key not in sec or sec[key] is None:
            raise self.error(f"{prefix}.{key}", "required key missing")
        return sec[key]

    def build(self, key, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except ConfigError:
            raise
        except (ConfigurationError, ValueError, TypeError, KeyError) as exc:
            raise self.error(key, str(exc).strip("'\"")) from None


def _model(ctx, d, key) -> StateSpaceModel:
    if not isinstance(d, dict):
        raise ctx.error(key, "expected a mapping with A, B, C")
    unknown = sorted(set(d) - {"A", "B", "C"})
    if unknown:
        raise ctx.error(f"{key}.{unknown[0]}", "unknown key (allowed: ['A', 'B', 'C'])")
    mats = [ctx.need(d, key, m) for m in "ABC"]
    return ctx.build(key, StateSpaceModel, *mats)


def _number(ctx, sec, prefix, key, default, kind=float):
    if key not in sec:
        return default
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ctx.error(f"{prefix}.{key}", f"expected a number, got {val!r}")
    if kind is int:
        if int(val) != val:
            raise ctx.error(f"{prefix}.{key}", f"expected an integer, got {val!r}")
        return int(val)
    return float(val)


def from_dict(data, source=None, lines=None) -> RunConfig:
    ctx = _Ctx(lines or {}, source)
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", source=source)
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ctx.error(unknown[0], f"unknown section (allowed: {sorted(SECTIONS)})")
    for name in REQUIRED:
        ctx.section(data, name, required=True)

    nominal = _model(ctx, data["nominal"], "nominal")

    p = ctx.section(data, "plant")
    truth = _model(ctx, ctx.need(p, "plant", "truth_model"), "plant.truth_model")
    pert_d = p.get("perturbation") or {"kind": "none"}
    if not isinstance(pert_d, dict):
        raise ctx.error("plant.perturbation", "expected a mapping")
    pert = ctx.build("plant.perturbation", PerturbationSpec.from_dict, pert_d)
    selector = p.get("output_selector", np.eye(truth.n_y).tolist())
    plant = ctx.build(
        "plant", TruePlant, truth, selector, pert, p.get("noise_std", 0.0),
        repeatable_noise=bool(p.get("repeatable_noise", False)),
    )

    pa = ctx.section(data, "path")
    wps = ctx.need(pa, "path", "waypoints")
    path = ctx.build("path.waypoints", ReferencePath, wps, closed=bool(pa.get("closed", False)),
                     corner_radius=pa.get("corner_radius"))

    il = ctx.section(data, "ilc")
    oc = ctx.section(data, "ocp")
    ocp = ctx.build("ocp", OcpConfig.from_dict, oc)

    g = ctx.section(data, "gpr")
    hp = None
    if g.get("hyperparameters") is not None:
        hp = ctx.build("gpr.hyperparameters", GpHyperparams.from_dict, g["hyperparameters"])
    fit = g.get("fit") or {}
    if not isinstance(fit, dict) or set(fit) - {"starts"}:
        raise ctx.error("gpr.fit", "expected a mapping with optional key 'starts'")
    lml = g.get("lml")
    if lml is not None:
        lml = ctx.build("gpr.lml", lambda v: tuple(float(x) for x in v), lml)

    rr = ctx.section(data, "r2r")
    out = ctx.section(data, "output")
    return ctx.build(
        "r2r", RunConfig,
        nominal=nominal, plant=plant, path=path,
        controller=ctx.build("r2r.controller", ControllerKind.parse, rr.get("controller", "agpr")),
        ilc_q=_number(ctx, il, "ilc", "q", 1.0),
        ilc_rho=_number(ctx, il, "ilc", "rho", 0.3),
        ilc_sigma=_number(ctx, il, "ilc", "sigma", 4e-4),
        ocp=ocp, hp=hp,
        fit_starts=_number(ctx, fit, "gpr.fit", "starts", 16, int),
        lml=lml,
        seed=_number(ctx, rr, "r2r", "seed", 0, int),
        epsilon=_number(ctx, rr, "r2r", "epsilon", 1e-6),
        k_max=_number(ctx, rr, "r2r", "k_max", 12, int),
        n_i=_number(ctx, rr, "r2r", "n_i", 400, int),
        fgpr_horizon=_number(ctx, rr, "r2r", "fgpr_horizon", 10, int),
        output_dir=str(out.get("dir", "out")),
        svg=bool(out.get("svg", False)),
    )


def loads(text: str, source=None) -> RunConfig:
    try:
        node = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          line=mark.line + 1 if mark else None, source=source) from None
    return from_dict(data, source=source, lines=_line_map(node) if node is not None else {})


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return loads(text, source=str(path))


def dump(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cfg.dumps())
