"""Command-line front end: ``headpond run | list | export-rules``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .config import ConfigError, RunConfig, build_run_config, load_config
from .fuzzy import Engine, build_rule_table, export_rules
from .integrate import IntegrationError
from .output import (
    format_comparison,
    format_metrics,
    metrics_document,
    plot_comparison,
    plot_levels,
    write_metrics_json,
    write_trajectory_csv,
)
from .plant import PlantError
from .scenarios import run_case, run_comparison, list_scenarios

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def _leg_path(path: Path, leg: str) -> Path:
    return path.with_name(f"{path.stem}.{leg}{path.suffix}")


def execute(cfg: RunConfig, out=None) -> list[Path]:
    """Run a validated config and write its artifacts; returns written paths."""
    written = []
    stem = cfg.scenario_name
    csv_path = cfg.csv or cfg.out_dir / f"{stem}.csv"
    if cfg.is_comparison:
        cmp = run_comparison(*cfg.legs)
        legs = ((cmp.first, cmp.first_traj, cmp.first_metrics), (cmp.second, cmp.second_traj, cmp.second_metrics))
        by_plant = cmp.first.plant != cmp.second.plant
        for sc, traj, _ in legs:
            label = sc.plant if by_plant else sc.controller
            written.append(write_trajectory_csv(traj, _leg_path(csv_path, label)))
        report = format_comparison(cmp)
        if cfg.plot:
            written.append(plot_comparison(cmp, cfg.plot))
    else:
        sc = cfg.legs[0]
        traj, metrics = run_case(sc)
        legs = ((sc, traj, metrics),)
        written.append(write_trajectory_csv(traj, csv_path))
        report = format_metrics(sc, metrics)
        if cfg.plot:
            written.append(plot_levels(traj, sc, cfg.plot))
    written.append(
        write_metrics_json([metrics_document(sc, m) for sc, _, m in legs], cfg.out_dir / f"{stem}.metrics.json")
    )
    print(report, file=out or sys.stdout)
    return written


def _cmd_run(args) -> int:
    try:
        if args.seedless:
            raise ConfigError("--seedless", "the simulation has no randomness; this flag is reserved")
        doc = load_config(args.config) if args.config else {}
        cfg = build_run_config(
            doc,
            scenario=args.scenario,
            out_dir=args.out,
            csv=args.csv,
            plot=args.plot,
            band=args.band,
            flow_mode=args.flow_mode,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        paths = execute(cfg)
    except IntegrationError as exc:
        print(f"simulation failed at t={exc.t:g} s: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except PlantError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_list(args) -> int:
    for name, description in list_scenarios():
        print(f"{name:<18} {description}")
    return EXIT_OK


def _cmd_export_rules(args) -> int:
    rules = build_rule_table(Engine(args.engine))
    try:
        path = export_rules(rules, args.path)
    except OSError as exc:
        print(f"cannot write {args.path}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(rules)} rules to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="headpond", description="Head-pond level regulation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a built-in or configured scenario")
    run.add_argument("--scenario", help="built-in scenario name (see `headpond list`)")
    run.add_argument("--config", help="YAML run configuration")
    run.add_argument("--out", help="output directory (default: results)")
    run.add_argument("--csv", help="trajectory CSV path")
    run.add_argument("--plot", help="write an SVG chart to this path")
    run.add_argument("--band", type=float, help="settling band in meters")
    run.add_argument("--flow-mode", choices=("literal", "dimensional"))
    run.add_argument("--seedless", action="store_true", help=argparse.SUPPRESS)
    run.set_defaults(func=_cmd_run)

    lst = sub.add_parser("list", help="list built-in scenarios")
    lst.set_defaults(func=_cmd_list)

    exp = sub.add_parser("export-rules", help="write an engine's 81-rule table")
    exp.add_argument("engine", choices=[e.value for e in Engine])
    exp.add_argument("path")
    exp.set_defaults(func=_cmd_export_rules)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
