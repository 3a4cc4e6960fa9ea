"""``aggsched`` command line.

    aggsched run <config> [--out DIR] [--seed N] [--planners LIST] [--oracle] [--format csv|json]
    aggsched sweep <config> --axis <param>=<v1,v2,...> [--out DIR] [--seed N] [--baseline NAME]

Exit status: 0 success, 2 configuration error, 3 simulation invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .experiment import (
    ConfigError,
    ExperimentConfig,
    SimulationError,
    emit_report,
    parse_axis,
    run_experiment,
    run_sweep,
    write_sweep,
)

EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def _load_dict(path: str) -> dict:
    p = Path(path)
    try:
        d = yaml.safe_load(p.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(path, f"cannot read config: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(path, f"malformed YAML: {e}") from e
    if not isinstance(d, dict):
        raise ConfigError(path, "config must be a mapping")
    return d


def _apply_overrides(d: dict, args) -> dict:
    planners = list(d.get("planners") or [])
    if args.planners:
        planners = [p.strip() for p in args.planners.split(",") if p.strip()]
    if getattr(args, "oracle", False) and "oracle" not in planners:
        planners.append("oracle")
    d["planners"] = planners
    out = dict(d.get("output") or {})
    if args.out:
        out["dir"] = args.out
    if getattr(args, "format", None):
        out["format"] = args.format
    d["output"] = out
    return d


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aggsched", description="Aggregation scheduling experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("config")
    run.add_argument("--out")
    run.add_argument("--seed", type=int)
    run.add_argument("--planners", help="comma-separated planner list")
    run.add_argument("--oracle", action="store_true", help="add the brute-force oracle")
    run.add_argument("--format", choices=("csv", "json"))

    sw = sub.add_parser("sweep", help="run a template over one parameter axis")
    sw.add_argument("config")
    sw.add_argument("--axis", required=True, help="<param.path>=<v1,v2,...>")
    sw.add_argument("--out")
    sw.add_argument("--seed", type=int)
    sw.add_argument("--planners")
    sw.add_argument("--baseline")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        d = _apply_overrides(_load_dict(args.config), args)
        base = Path(args.config).parent
        if args.command == "run":
            cfg = ExperimentConfig.from_dict(d, base_dir=base, seed=args.seed)
            report = run_experiment(cfg)
            for p in emit_report(report, cfg.out_dir, cfg.format):
                print(p)
        else:
            axis, values = parse_axis(args.axis)
            rows, _ = run_sweep(d, axis, values, base_dir=base, seed=args.seed, baseline=args.baseline)
            out = Path((d.get("output") or {}).get("dir", "out"))
            print(write_sweep(rows, out / "sweep.csv"))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as e:
        print(f"simulation error: {e}", file=sys.stderr)
        return EXIT_SIMULATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
