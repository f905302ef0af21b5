"""Command-line front end.

    r2rlearn simulate   [--config F] [--controller K] [--seed N] [--out DIR] [--svg]
    r2rlearn bench      [--config F] [--controllers ff,ilc,agpr] [--fgpr] [--seeds 1,2,3] [--out DIR]
    r2rlearn fit-hypers [--config F] [--starts N] [--seed N] [--out FILE]
    r2rlearn init       [--out FILE]

Without --config the built-in benchmark is used. Exit codes: 0 ok,
2 configuration error, 3 run or fitting error. Log verbosity comes from the
R2RLEARN_LOG environment variable (DEBUG, INFO, WARNING, ...).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from r2rlearn import config as cfgmod
from r2rlearn import path as pathmod
from r2rlearn import r2r
from r2rlearn.errors import ConfigurationError, FittingError, NumericalError, RunError
from r2rlearn.gpr import log_marginal_likelihood

log = logging.getLogger("r2rlearn")

EXIT_OK, EXIT_CONFIG, EXIT_RUN = 0, 2, 3
DEFAULT_BENCH = ("ff", "ilc", "agpr")


def _setup_logging():
    level = os.environ.get("R2RLEARN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.default_config()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "starts", None) is not None:
        changes["fit_starts"] = args.starts
    if getattr(args, "controller", None) is not None:
        changes["controller"] = r2r.ControllerKind.parse(args.controller)
    if getattr(args, "svg", False):
        changes["svg"] = True
    return cfg.with_(**changes) if changes else cfg


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _parse_list(text, conv=str):
    items = [t.strip() for t in str(text).split(",") if t.strip()]
    if not items:
        raise ConfigurationError(f"empty list {text!r}")
    try:
        return [conv(t) for t in items]
    except ValueError:
        raise ConfigurationError(f"cannot parse list {text!r}") from None


def trajectory_svg(result: r2r.RunResult, path: pathmod.ReferencePath, size: int = 480) -> str:
    """Reference (grey) vs final measured trajectory (blue) as plain SVG."""
    ref = pathmod.discretize(path, 800).reshape(-1, 2)
    y = result.records[-1].y_k
    pts = np.vstack([ref, y])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(np.max(hi - lo)) or 1.0
    pad = 10.0
    scale = (size - 2 * pad) / span

    def poly(P, color):
        xy = " ".join(f"{pad + (p[0] - lo[0]) * scale:.3f},{size - pad - (p[1] - lo[1]) * scale:.3f}" for p in P)
        return f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{xy}"/>'

    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n'
        f"{poly(ref, '#999999')}\n{poly(y, '#1f4fbf')}\n</svg>\n"
    )


def _summary_row(seed, kind, res):
    label = {"agpr": "A-GPR", "fgpr": "F-GPR"}.get(kind.value, kind.value.upper())
    return {
        "seed": seed, "controller": label, "iterations": len(res.records),
        "rms_initial": res.records[0].rms_contour, "rms_converged": res.converged_rms(),
        "improvement_pct": res.improvement_pct(),
    }


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = Path(args.out or cfg.output_dir)
    scn = cfg.scenario()
    res = r2r.run(scn, cfg.controller)
    _write(out / "iterations.csv", r2r.iteration_csv(res))
    _write(out / "summary.csv", r2r.summary_csv([_summary_row(cfg.seed, cfg.controller, res)]))
    _write(out / "diagnostics.csv", r2r.diagnostics_csv(res))
    _write(out / "trajectory.csv", r2r.trajectory_csv(res, cfg.path))
    if cfg.svg:
        _write(out / "trajectory.svg", trajectory_svg(res, cfg.path))
    print(f"{cfg.controller.value}: iterations={len(res.records)} "
          f"final_rms_contour={res.records[-1].rms_contour:.6g} improvement={res.improvement_pct():.2f}%")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _load(args)
    out = Path(args.out or cfg.output_dir)
    kinds = [r2r.ControllerKind.parse(k) for k in
             (_parse_list(args.controllers) if args.controllers else DEFAULT_BENCH)]
    if args.fgpr and r2r.ControllerKind.FGPR not in kinds:
        kinds.append(r2r.ControllerKind.FGPR)
    seeds = _parse_list(args.seeds, int) if args.seeds else [cfg.seed]
    scn = cfg.scenario()
    rows = []
    for seed in seeds:
        seed_rows, results = r2r.compare_controllers(scn, kinds, seed, hp=cfg.hp)
        rows.extend(seed_rows)
        _write(out / f"plot_data_seed{seed}.csv", r2r.plot_data_csv(results))
        for kind, res in results.items():
            _write(out / f"iterations_{kind.value}_seed{seed}.csv", r2r.iteration_csv(res))
    if len(seeds) > 1:
        for label in dict.fromkeys(r["controller"] for r in rows):
            sel = [r for r in rows if r["controller"] == label]
            rows.append({
                "seed": "mean", "controller": label,
                "iterations": int(round(np.mean([r["iterations"] for r in sel]))),
                **{c: float(np.mean([r[c] for r in sel]))
                   for c in ("rms_initial", "rms_converged", "improvement_pct")},
            })
    _write(out / "summary.csv", r2r.summary_csv(rows))
    print(f"{'seed':>6} {'controller':>10} {'iters':>5} {'rms0 [mm]':>12} {'rms_conv [mm]':>14} {'impr %':>8}")
    for r in rows:
        print(f"{str(r['seed']):>6} {r['controller']:>10} {r['iterations']:>5} "
              f"{r['rms_initial']:>12.4e} {r['rms_converged']:>14.4e} {r['improvement_pct']:>8.2f}")
    return EXIT_OK


def cmd_fit_hypers(args) -> int:
    cfg = _load(args)
    scn = cfg.scenario()
    hp, D0 = r2r.fit_scenario_hyperparams(scn)
    lml = tuple(float(log_marginal_likelihood(D0, hp, m)) for m in range(len(hp.channels)))
    fitted = cfg.with_(hp=hp, lml=lml)
    dest = Path(args.out) if args.out else Path(cfg.output_dir) / "hyperparams.yaml"
    _write(dest, fitted.dumps())
    for m, (ch, v) in enumerate(zip(hp.channels, lml)):
        print(f"channel {m}: lml={v:.6g} noise_std={ch.noise_std:.4g} signal_std={ch.signal_std:.4g} "
              f"lengthscales=[{', '.join(f'{x:.4g}' for x in ch.lengthscales)}]")
    print(f"wrote {dest}")
    return EXIT_OK


def cmd_init(args) -> int:
    dest = Path(args.out or "benchmark.yaml")
    _write(dest, cfgmod.default_config().dumps())
    print(f"wrote {dest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="r2rlearn", description="Run-to-run learning contouring control")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one controller")
    s.add_argument("--config", help="YAML run configuration (default: built-in benchmark)")
    s.add_argument("--controller", help="ff, ilc, agpr or fgpr")
    s.add_argument("--seed", type=int)
    s.add_argument("--starts", type=int, help="hyperparameter fit restarts")
    s.add_argument("--out", help="output directory")
    s.add_argument("--svg", action="store_true", help="also render reference vs final trajectory")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="compare controllers")
    b.add_argument("--config")
    b.add_argument("--controllers", help=f"comma list (default {','.join(DEFAULT_BENCH)})")
    b.add_argument("--fgpr", action="store_true", help="include F-GPR")
    b.add_argument("--seeds", help="comma list of seeds (default: config seed)")
    b.add_argument("--starts", type=int)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    f = sub.add_parser("fit-hypers", help="fit GP hyperparameters on an excitation run")
    f.add_argument("--config")
    f.add_argument("--starts", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--out", help="output YAML file")
    f.set_defaults(func=cmd_fit_hypers)

    i = sub.add_parser("init", help="write the built-in benchmark configuration")
    i.add_argument("--out")
    i.set_defaults(func=cmd_init)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FittingError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        for d in exc.diagnostics:
            print(f"  start {d['start']}: lml={d['lml']:.6g} {d['message']}", file=sys.stderr)
        return EXIT_RUN
    except (RunError, NumericalError) as exc:
        print(f"run error: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
