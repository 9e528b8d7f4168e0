"""Command-line front end.

Exit codes: 0 on success, 2 for an invalid configuration, 3 for a numerical
failure such as a positivity breach.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import NumericalError
from . import presets
from .config import ConfigError, canonical_json, config_hash, load, normalize
from .modes import MODES, classify, classify_scenario, run

__all__ = ["main", "run", "classify", "classify_scenario", "ConfigError"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmeter", description="Radical-pair yields and photon-counting kinetics.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="JSON run configuration")
    src.add_argument("--preset", metavar="NAME", help="built-in configuration: " + ", ".join(sorted(presets.PRESETS)))
    p.add_argument("--mode", choices=MODES, help="override the configured mode")
    p.add_argument("--out", metavar="PATH", help="write the table here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")
    p.add_argument("--jobs", type=int, metavar="N", help="worker processes for sweeps (default: cpu count)")
    p.add_argument("--dt", type=float, metavar="SECONDS", help="fixed integration step")
    p.add_argument("--tmax", type=float, metavar="SECONDS", help="integration horizon")
    p.add_argument("--echo-config", action="store_true", help="print the normalised config and its hash, then exit")
    p.add_argument("--list-presets", action="store_true", help="list built-in configurations and exit")
    return p


def resolve_config(args) -> dict:
    """Assemble the normalised config from the file or preset plus flag overrides."""
    if args.config:
        config = load(args.config)
    elif args.preset:
        config = presets.get(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")
    if not isinstance(config, dict):
        raise ConfigError("config field $: must be a JSON object")
    if args.mode:
        config["mode"] = args.mode
    if args.dt is not None or args.tmax is not None:
        num = dict(config.get("numerics") or {})
        if args.dt is not None:
            num["dt_s"] = args.dt
        if args.tmax is not None:
            num["t_max_s"] = args.tmax
        config["numerics"] = num
    if args.out is not None or args.format is not None:
        out = dict(config.get("output") or {})
        if args.out is not None:
            out["path"] = args.out
        if args.format is not None:
            out["format"] = args.format
        config["output"] = out
    return normalize(config)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_presets:
        for name in sorted(presets.PRESETS):
            print(f"{name}\t{presets.PRESETS[name]['mode']}")
        return EXIT_OK
    if args.jobs is not None and args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = resolve_config(args)
        if args.echo_config:
            print(canonical_json(config))
            print(f"# config_sha256={config_hash(config)}", file=sys.stderr)
            return EXIT_OK
        table = run(config, jobs=args.jobs)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = getattr(table, "report", None)
    if report is not None:
        print(report.text(), file=sys.stderr)
    text = table.render(config["output"]["format"])
    path = config["output"]["path"]
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK
