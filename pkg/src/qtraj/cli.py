"""qtraj command line.

Usage:
    qtraj run scenario.json [--out report.json] [--tol X]
    qtraj paper-examples [--out report.json] [--csv trends.csv]
    qtraj validate channel.json

Exit codes: 0 success, 1 a reference row out of tolerance, 2 invalid input,
3 an iterative method did not converge.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .capacity import NonConvergence
from .channels import KrausChannel, validate_cptp
from .linops import TOLERANCES
from .schema import CHANNEL_FILE, schema_errors

EXIT_OK = 0
EXIT_ROWS_FAILED = 1
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _Invalid([{"path": "", "message": f"cannot read {path}: {exc.strerror}"}]) from exc
    except json.JSONDecodeError as exc:
        raise _Invalid([{"path": "", "message": f"invalid JSON at line {exc.lineno}: {exc.msg}"}]) from exc


class _Invalid(Exception):
    def __init__(self, problems):
        self.problems = problems
        super().__init__(problems)


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _fail_invalid(problems) -> int:
    print(json.dumps({"error": "validation", "problems": problems}, indent=2), file=sys.stderr)
    return EXIT_INVALID


def _seed_override() -> int | None:
    raw = os.environ.get("QTRAJ_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise _Invalid([{"path": "", "message": f"QTRAJ_SEED must be an integer, got {raw!r}"}])


def cmd_run(args) -> int:
    from .scenarios import ScenarioError, run_scenario_data

    try:
        data = _load_json(args.scenario)
        seed = _seed_override()
    except _Invalid as exc:
        return _fail_invalid(exc.problems)
    if not isinstance(data, dict):
        return _fail_invalid([{"path": "", "message": "scenario must be a JSON object"}])
    tol = args.tol if args.tol is not None else data.get("tol", TOLERANCES["matrix_atol"])
    if seed is None:
        seed = data.get("seed", 0)
    out_path = args.out or data.get("report")
    report = {
        "qtraj_version": __version__,
        "kind": data.get("kind"),
        "seed": seed,
        "inputs": data,
        "tolerances": {**TOLERANCES, "scenario_tol": tol},
    }
    start = time.perf_counter()
    code = EXIT_OK
    try:
        report["outputs"] = run_scenario_data(data, tol=tol, seed=seed)
        report["status"] = "ok"
    except ScenarioError as exc:
        return _fail_invalid(exc.problems)
    except NonConvergence as exc:
        report["outputs"] = exc.report.to_dict()
        report["status"] = "non_converged"
        print(str(exc), file=sys.stderr)
        code = EXIT_NONCONVERGED
    report["wall_time_s"] = time.perf_counter() - start
    _emit(report, out_path)
    return code


def cmd_examples(args) -> int:
    from .reproduce import examples_report, write_series_csv

    start = time.perf_counter()
    try:
        rows, series = examples_report()
    except NonConvergence as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NONCONVERGED
    report = {
        "qtraj_version": __version__,
        "tolerances": TOLERANCES,
        "rows": [r.to_dict() for r in rows],
        "series": series,
        "all_pass": all(r.passed for r in rows),
        "wall_time_s": time.perf_counter() - start,
    }
    csv_path = args.csv
    if csv_path is None and args.out:
        out = Path(args.out)
        csv_path = out.with_name(out.stem + "_trends.csv")
    if csv_path:
        write_series_csv(series, csv_path)
        report["series_csv"] = str(csv_path)
    _emit(report, args.out)
    for r in rows:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name}: {r.computed:.10g} vs {r.reference:.10g} (dev {r.deviation:.3g})", file=sys.stderr)
    return EXIT_OK if report["all_pass"] else EXIT_ROWS_FAILED


def cmd_validate(args) -> int:
    from .vacuum import VacuumExtension, check_extension_sectors

    try:
        data = _load_json(args.channel)
    except _Invalid as exc:
        return _fail_invalid(exc.problems)
    problems = schema_errors(data, CHANNEL_FILE)
    if problems:
        return _fail_invalid(problems)
    result = {"qtraj_version": __version__}
    try:
        if "vac_blocks" in data:
            ext = VacuumExtension.from_dict(data)
            check_extension_sectors(ext)
            rep = validate_cptp(ext.channel)
            result.update(kind="extension", no_leakage=True)
        else:
            rep = validate_cptp(KrausChannel.from_dict(data))
            result.update(kind="channel")
    except ValueError as exc:
        return _fail_invalid([{"path": "", "message": str(exc)}])
    result.update(cptp=rep.ok, max_deviation=rep.max_deviation)
    print(json.dumps(result, indent=2))
    return EXIT_OK if rep.ok else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtraj", description="Channels on superposed trajectories.")
    parser.add_argument("--version", action="version", version=f"qtraj {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a scenario file and write a JSON report")
    p.add_argument("scenario")
    p.add_argument("--out", help="report path (default: scenario 'report' field, else stdout)")
    p.add_argument("--tol", type=float, help="override the scenario tolerance")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("paper-examples", help="recompute the reference example table")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--csv", help="path for the N-series CSV (default: beside --out)")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("validate", help="check a channel or vacuum extension file")
    p.add_argument("channel")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
