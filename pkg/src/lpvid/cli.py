"""Command-line entry point: ``lpvid {simulate,ident,validate}``.

Exit codes: 0 success, 2 bad configuration or input files, 3 trim failure,
4 trajectory divergence.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from . import __version__, harness, ident
from ._io import atomic_path, write_json
from .errors import DivergenceError, StructuralError, TrimError
from .heli.params import HeliParams
from .lpv import LpvIoModel, TimeSeries

EXIT_CONFIG, EXIT_TRIM, EXIT_DIVERGENCE = 2, 3, 4

log = logging.getLogger("lpvid")


class ConfigError(Exception):
    pass


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Manifest:
    """``manifest.json`` in the output directory: written up front, completed at the end."""

    def __init__(self, out: Path, command: str, args: argparse.Namespace):
        self.path = out / "manifest.json"
        self.doc = {
            "command": command,
            "config_paths": {k: getattr(args, k, None) for k in ("config", "params", "dataset", "model")
                             if getattr(args, k, None)},
            "seed": getattr(args, "seed", None),
            "version": __version__,
            "output_dir": str(out),
            "started": _now(),
            "finished": None,
            "files": [],
        }
        write_json(self.path, self.doc)

    def finish(self, files) -> None:
        self.doc["files"] = sorted(Path(f).name for f in files)
        self.doc["finished"] = _now()
        write_json(self.path, self.doc)


def _load_experiment(args) -> harness.ExperimentConfig:
    try:
        cfg = harness.ExperimentConfig.load(args.config) if args.config else harness.ExperimentConfig()
        changes = {}
        if getattr(args, "params", None):
            changes["params_path"] = args.params
        if getattr(args, "seed", None) is not None:
            changes["seed"] = args.seed
        if getattr(args, "channel", None):
            changes["channel"] = args.channel
        ident_changes = {}
        if getattr(args, "forgetting", None) is not None:
            ident_changes["forgetting"] = args.forgetting
        if getattr(args, "alpha", None) is not None:
            ident_changes["alpha"] = args.alpha
        if ident_changes:
            changes["ident"] = harness.replace(cfg.ident, **ident_changes)
        cfg = cfg.replace(**changes) if changes else cfg
        cfg.load_params()
        return cfg
    except FileNotFoundError as exc:
        raise ConfigError(f"cannot read {exc.filename}") from exc
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def cmd_simulate(args) -> int:
    cfg = _load_experiment(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out, "simulate", args)
    flight = harness.fly(cfg)
    path = out / "trajectory.csv"
    flight.write_trajectory(path)
    manifest.finish([path])
    print(f"simulated {cfg.duration:g} s ({len(flight.t)} samples at T = {cfg.period:g} s), "
          f"airspeed {flight.airspeed.min():.2f}..{flight.airspeed.max():.2f} m/s -> {path}")
    return 0


def _ident_synthetic(args, out: Path, manifest: Manifest) -> int:
    scfg = harness.SyntheticConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    ident_changes = {k: v for k, v in (("forgetting", args.forgetting), ("alpha", args.alpha)) if v is not None}
    if ident_changes:
        changes["ident"] = harness.replace(scfg.ident, **ident_changes)
    if changes:
        scfg = harness.replace(scfg, **changes)
    rep = harness.synthetic_experiment(scfg)
    series, fit, model = rep["_series"], rep["_fit"], rep["_model"]
    val = harness.validate(model, series, args.mode)
    extra = {"synthetic": harness.public_report(rep), "seed": scfg.seed, "validation_data": "same"}
    files = harness.write_run(out, series, fit, model, val, scfg.to_dict(), extra)
    manifest.finish(files)
    print(f"synthetic recovery: max |theta_hat - theta_true| = {rep['max_abs_error']:.3e} "
          f"(rank {rep['rank']}/{rep['n_params']}, sigma_min {rep['sigma_min']:.3e})")
    return 0


def cmd_ident(args) -> int:
    out = Path(args.out)
    if args.synthetic:
        out.mkdir(parents=True, exist_ok=True)
        return _ident_synthetic(args, out, Manifest(out, "ident", args))
    cfg = _load_experiment(args)
    datasets = None
    if args.dataset:
        try:
            series = TimeSeries.read_csv(args.dataset)
        except FileNotFoundError as exc:
            raise ConfigError(f"cannot read {exc.filename}") from exc
        except StructuralError as exc:
            raise ConfigError(str(exc)) from exc
        datasets = {cfg.channel: series}
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out, "ident", args)
    try:
        series, fit, model, val, clamp = harness.run_experiment(cfg, out, mode=args.mode, datasets=datasets)
    except StructuralError as exc:
        raise ConfigError(str(exc)) from exc
    manifest.finish([out / f for f in harness.RUN_FILES])
    print(f"channel {cfg.channel}: identification fit {fit.fit_percent:.2f} %, "
          f"{val.mode} validation fit {val.fit_percent:.2f} % (rmse {val.rmse:.4g}) -> {out}")
    return 0


def cmd_validate(args) -> int:
    try:
        model = LpvIoModel.load(args.model)
        series = TimeSeries.read_csv(args.dataset)
        val = harness.validate(model, series, args.mode)
    except FileNotFoundError as exc:
        raise ConfigError(f"cannot read {exc.filename}") from exc
    except (StructuralError, json.JSONDecodeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out, "validate", args)
    val.write_csv(out / "validation.csv")
    metrics = {"mode": val.mode, "samples": int(val.t.size), "rmse": val.rmse,
               "fit_percent": None if val.fit_percent != val.fit_percent else val.fit_percent}
    write_json(out / "metrics.json", metrics)
    manifest.finish([out / "validation.csv", out / "metrics.json"])
    print(f"{val.mode} fit {val.fit_percent:.2f} % (rmse {val.rmse:.4g}) -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpvid", description="LPV-ARX identification of a simulated helicopter.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="fly the experiment profile and write trajectory.csv")
    p.add_argument("--config", help="experiment config JSON (defaults used if omitted)")
    p.add_argument("--params", help="helicopter parameter JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="excitation/noise seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ident", help="generate (or load) data, identify, validate")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--params", help="helicopter parameter JSON")
    p.add_argument("--dataset", help="dataset CSV (t,u,y,p) used instead of simulating")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--channel", choices=harness.CHANNELS)
    p.add_argument("--mode", choices=("one_step", "free_run"), default="one_step")
    p.add_argument("--synthetic", action="store_true", help="synthetic true-model recovery instead")
    p.add_argument("--lambda", dest="forgetting", type=float, help="RLS forgetting factor")
    p.add_argument("--alpha", type=float, help="initial covariance scale")
    p.set_defaults(func=cmd_ident)

    p = sub.add_parser("validate", help="compare a saved model with a dataset")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--dataset", required=True, help="dataset CSV (t,u,y,p)")
    p.add_argument("--mode", choices=("one_step", "free_run"), default="one_step")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrimError as exc:
        print(f"trim failed: {exc}; residual {exc.residual}", file=sys.stderr)
        return EXIT_TRIM
    except DivergenceError as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
