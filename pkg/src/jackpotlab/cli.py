"""Batch command-line interface: simulate scenarios, parse transaction
logs into panels, and emit paper-style analysis tables with figures.

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 numerical
failure (for example two-way demeaning non-convergence).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import InsufficientSampleError
from .panel import SchemaError, read_panel_csv, write_panel_csv
from .regression import ConvergenceError, RankDeficiencyError
from .reports import TABLE_NAMES, RunManifest, build_table, sha256_path, write_report
from .scenario import ConfigError, load_config
from .simulate import simulate_to_dir
from .txlog import CalendarError, CompanyTable, parse_log_dir

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="jackpotlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario; write panel + transaction logs")
    sim.add_argument("--config", required=True, help="scenario JSON")
    sim.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--threads", type=int, default=None, help="cap numeric thread pools")

    tab = sub.add_parser("tables", help="emit one analysis table from a panel CSV")
    tab.add_argument("--panel", required=True, help="panel CSV path")
    tab.add_argument("--table", required=True, choices=TABLE_NAMES)
    tab.add_argument("--out", required=True, help="output directory")
    tab.add_argument("--cutoff", type=float, default=0.10, help="feedback category cutoff")
    tab.add_argument("--mode", choices=("relative", "absolute"), default="relative")
    tab.add_argument("--min-matches", type=int, default=500, help="figure1: minimum picks per gambler")
    tab.add_argument("--level", type=float, default=0.95, help="figure1: confidence level")
    tab.add_argument("--threads", type=int, default=None, help="cap numeric thread pools")

    par = sub.add_parser("parse", help="aggregate a transaction-log bundle into a panel CSV")
    par.add_argument("--log", required=True, help="directory with bets.log, ledger.csv, weeks.json")
    par.add_argument("--out", required=True, help="output directory")
    par.add_argument("--companies", default=None, help="optional company table JSON")
    par.add_argument("--threads", type=int, default=None, help="cap numeric thread pools")
    return parser


def _cap_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise UsageError("--threads must be >= 1")
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        import os

        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _write_manifest_sidecar(out_dir: Path, manifest: RunManifest, paths: dict) -> None:
    payload = json.loads(manifest.to_json())
    payload["outputs"] = {k: str(v) for k, v in paths.items()}
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    out = Path(args.out)
    paths = simulate_to_dir(config, out)
    manifest = RunManifest(
        command="simulate",
        params={"population": config.population, "weeks": config.weeks},
        seed=config.seed,
        input_hashes={"config": sha256_path(args.config)},
    )
    _write_manifest_sidecar(out, manifest, paths)
    print(f"simulated {config.population} individuals x {config.weeks} weeks (seed {config.seed})")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return EXIT_OK


def _cmd_tables(args) -> int:
    panel = read_panel_csv(args.panel)
    params = {"table": args.table, "cutoff": args.cutoff, "mode": args.mode}
    build_kwargs = {"cutoff": args.cutoff, "mode": args.mode}
    if args.table == "figure1":
        params.update(min_matches=args.min_matches, level=args.level)
        build_kwargs = {"min_matches": args.min_matches, "level": args.level}
    text, tidy = build_table(panel, args.table, **build_kwargs)
    manifest = RunManifest(
        command="tables",
        params=params,
        seed=None,
        input_hashes={"panel": sha256_path(args.panel)},
    )
    figure = _make_figure(panel, args, tidy)
    out = Path(args.out)
    paths = write_report(out, args.table, text, tidy, manifest, figure)
    _write_manifest_sidecar(out, manifest, paths)
    print(text)
    return EXIT_OK


def _make_figure(panel, args, tidy):
    from . import figures
    from .intervals import ability_table

    if args.table == "figure1":
        return figures.ability_figure(ability_table(panel, args.min_matches, args.level))
    if "estimate" in tidy.columns:
        return figures.coefficient_figure(tidy, args.table)
    if "mean" in tidy.columns:
        renamed = tidy.rename(columns={"mean": "estimate"})
        return figures.coefficient_figure(renamed, args.table)
    return None


def _cmd_parse(args) -> int:
    companies = CompanyTable.from_json(args.companies) if args.companies else None
    panel, errors = parse_log_dir(args.log, companies=companies)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    panel_path = out / "panel.csv"
    write_panel_csv(panel, panel_path)
    manifest = RunManifest(
        command="parse",
        params={"error_counts": errors},
        seed=None,
        input_hashes={
            name: sha256_path(Path(args.log) / name)
            for name in ("bets.log", "ledger.csv", "weeks.json")
        },
    )
    _write_manifest_sidecar(out, manifest, {"panel": panel_path})
    print(f"parsed panel: {len(panel)} rows, {panel['individual_id'].nunique() if len(panel) else 0} individuals")
    print("bet-line parse errors:")
    for kind, count in errors.items():
        print(f"  {kind}: {count}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _cap_threads(args.threads)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "tables":
            return _cmd_tables(args)
        return _cmd_parse(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, SchemaError, CalendarError, InsufficientSampleError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, RankDeficiencyError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
