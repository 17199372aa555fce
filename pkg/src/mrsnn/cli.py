"""Command-line entry point: ``mrsnn <experiment> ...`` and ``mrsnn presets list``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import EXPERIMENTS, ExperimentConfig, load_config
from .errors import ConfigError, DatasetError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mrsnn", description="Spiking networks on modeled RRAM crossbars")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=Path, help="experiment config JSON")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", type=Path, help="run directory (default runs/<experiment>-seed<N>)")
        p.add_argument("--ideal", action="store_true", help="ideal devices: no variation, exact writes")
        p.add_argument("--xl", action="store_true", help="full-size 512x512 arrays (slow)")
    presets = sub.add_parser("presets", help="device presets")
    presets.add_argument("action", choices=["list"])
    return ap


def _resolve(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
        if cfg.experiment != args.command:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {args.command!r}")
    elif args.seed is None:
        raise ConfigError("give --config or at least --seed")
    else:
        cfg = ExperimentConfig(args.command, args.seed)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.ideal:
        changes["ideal"] = True
    if args.xl:
        changes["xl"] = True
    if args.out is not None:
        changes["out_dir"] = str(args.out)
    return cfg.replace(**changes) if changes else cfg


def _list_presets() -> None:
    from .device import list_presets

    print("name,v_p,g_max_nS,g_min_nS,alpha_p,alpha_d,beta_p_nS,beta_d_nS,valid")
    for name, rows, valid in list_presets():
        fields = [rows[k] for k in ("v_p", "g_max", "g_min", "alpha_p", "alpha_d", "beta_p", "beta_d")]
        print(",".join([name, *(f"{v:g}" for v in fields), "yes" if valid else "no"]))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "presets":
        _list_presets()
        return EXIT_OK
    from .experiments import run_experiment, write_run

    try:
        cfg = _resolve(args)
        result = run_experiment(cfg)
    except (ConfigError, DatasetError) as exc:
        print(f"mrsnn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"mrsnn: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = cfg.out_dir or f"runs/{cfg.experiment}-seed{cfg.seed}"
    path = write_run(result, out)
    print(json.dumps({"out": str(path), **result.summary}, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
