"""Command line entry point: run scenarios, suites and plot-data extraction.

Exit codes: 0 success, 2 invalid scenario or input, 3 precision exhausted,
4 roof outside the required class, 5 falsification event.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import groupby
from pathlib import Path
from typing import TYPE_CHECKING, Any, get_args

import structlog
from pydantic import ValidationError

from specflow import __version__
from specflow._internal.serialization import (
    atomic_write_text,
    columns_text,
    csv_text,
    json_text,
)
from specflow.config import get_config
from specflow.core.cf_engine import cf_expand, parse_quadratic
from specflow.errors import (
    FalsificationError,
    InvalidInputError,
    ScenarioError,
    SpecflowError,
)
from specflow.experiments import HANDLERS, ExperimentInput, build_roof
from specflow.logging_config import configure_logging
from specflow.models.api import PrecisionDiagnostics, RunReport, Scenario
from specflow.types import PlotKind


if TYPE_CHECKING:
    from collections.abc import Sequence

    from pydantic import BaseModel
    from useful_types import SequenceNotStr

    from specflow.experiments import ExperimentResult


log = structlog.get_logger()

EXIT_OK = 0
EXIT_FALSIFIED = FalsificationError.exit_code

_PLOT_SOURCES: dict[str, str] = {
    "drift": "ratner",
    "mixing": "mixing",
    "rigidity": "rigidity",
    "dk": "dk",
    "distribution": "distribution",
    "gaps": "gaps",
    "birkhoff": "birkhoff",
}


# ──────────────────────────────────────────────────────────────
# Scenario loading
# ──────────────────────────────────────────────────────────────
def load_scenario(path: Path) -> tuple[Scenario, BaseModel]:
    """Parse and validate a scenario file and its experiment parameters."""
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError(str(path), f"unreadable: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(path), f"invalid JSON: {exc.msg}") from exc
    try:
        scenario = Scenario.model_validate(data)
        model, _ = HANDLERS[scenario.experiment]
        params = model.model_validate(scenario.params)
    except ValidationError as exc:
        raise ScenarioError(str(path), _summarize(exc)) from exc
    return scenario, params


def _summarize(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{where}: {err['msg']}")
    return "; ".join(parts)


def _output_paths(path: Path, scenario: Scenario) -> tuple[Path, str]:
    directory = path.parent / scenario.output.directory
    return directory, scenario.output.stem or path.stem


# ──────────────────────────────────────────────────────────────
# Running
# ──────────────────────────────────────────────────────────────
def _write_outputs(
    report: RunReport, result: ExperimentResult, directory: Path, stem: str
) -> list[Path]:
    fmt = report.scenario["output"]["format"]
    written = []
    if fmt in ("json", "both"):
        target = directory / f"{stem}.json"
        atomic_write_text(target, json_text(report.model_dump(mode="json")))
        written.append(target)
    if fmt in ("csv", "both") and result.table is not None:
        target = directory / f"{stem}.csv"
        text = csv_text(result.table.header(), result.table.iter_rows())
        atomic_write_text(target, text)
        written.append(target)
    return written


def run_scenario(path: Path) -> RunReport:
    """Validate, run and write one scenario; returns the in-memory report."""
    scenario, params = load_scenario(path)
    structlog.contextvars.bind_contextvars(
        scenario=path.name, experiment=scenario.experiment
    )
    started = time.perf_counter()
    depth = scenario.depth or get_config().cf_depth
    alpha = cf_expand(parse_quadratic(scenario.alpha), depth)
    roof = build_roof(scenario.roof, alpha)
    _, handler = HANDLERS[scenario.experiment]
    result = handler(ExperimentInput(alpha, roof, scenario.seed), params)
    wall = time.perf_counter() - started

    report = RunReport(
        version=__version__,
        scenario=scenario.model_dump(mode="json"),
        experiment=scenario.experiment,
        payload=result.payload,
        falsifications=result.falsifications,
        rng=result.rng,
        precision=PrecisionDiagnostics(
            bits=alpha.bits, max_error_bound=result.error_bound
        ),
        wall_time=wall,
    )
    directory, stem = _output_paths(path, scenario)
    written = _write_outputs(report, result, directory, stem)
    log.info(
        "scenario_done",
        falsifications=result.falsifications,
        wall_time=round(wall, 3),
        outputs=[str(p) for p in written],
    )
    return report


def exit_code_for(path: Path) -> int:
    """Run one scenario and map its outcome to an exit code."""
    try:
        report = run_scenario(path)
    except SpecflowError as exc:
        log.error("scenario_failed", error=str(exc), exit_code=exc.exit_code)
        return exc.exit_code
    finally:
        structlog.contextvars.clear_contextvars()
    if report.falsifications:
        log.error(
            "scenario_falsified",
            scenario=path.name,
            falsifications=report.falsifications,
        )
        return EXIT_FALSIFIED
    return EXIT_OK


def _scenario_files(paths: SequenceNotStr[Path]) -> list[Path]:
    files: list[Path] = []
    for p in paths:
        if p.is_dir():
            files.extend(sorted(p.glob("*.json")))
        elif p.exists():
            files.append(p)
        else:
            raise InvalidInputError("suite path", f"{p} does not exist")
    return files


def suite(paths: SequenceNotStr[Path], jobs: int = 1) -> int:
    """Run scenarios with up to ``jobs`` workers; returns the worst exit code."""
    files = _scenario_files(paths)
    if jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            codes = list(pool.map(exit_code_for, files))
    else:
        codes = [exit_code_for(f) for f in files]
    status = max(codes, default=EXIT_OK)
    log.info("suite_done", scenarios=len(files), exit_code=status)
    return status


# ──────────────────────────────────────────────────────────────
# Plot data
# ──────────────────────────────────────────────────────────────
def _plot_series(
    kind: str, payload: dict[str, Any]
) -> list[tuple[str, tuple[str, ...], list[list[Any]], list[str]]]:
    """(suffix, columns, rows, comments) for every file of one plot kind."""
    if kind == "drift":
        band = payload.get("band", {})
        comments = [f"rho {band.get('rho')}", f"epsilon {band.get('epsilon')}"]
        return [("drift", ("n", "g"), payload.get("trace", []), comments)]
    if kind == "mixing":
        columns = ("r", "magnitude", "bound")
        grid = sorted(payload.get("grid", []), key=lambda row: (row[1], row[0]))
        if not grid:
            return [("mixing", columns, [], [])]
        series = []
        for q, rows in groupby(grid, key=lambda row: row[1]):
            points = [[r[0], r[2], r[3]] for r in rows]
            series.append((f"mixing_q{q}", columns, points, []))
        return series
    if kind == "rigidity":
        rows = [row[:2] for row in payload.get("profile", [])]
        comments = [f"epsilon {payload.get('epsilon')}"]
        return [("rigidity", ("t", "mass"), rows, comments)]
    if kind == "dk":
        rows = [row[1:] for row in payload.get("rows", [])]
        comments = [f"variation {payload.get('variation')}"]
        return [("dk", ("n_index", "q_n", "residual"), rows, comments)]
    if kind == "distribution":
        hists = payload.get("histograms", [])
        if not hists:
            return [("distribution", ("bin_left", "mass"), [], [])]
        columns = ("bin_left", "mass")
        return [
            (f"distribution_q{h['q']}", columns, h["bins"], [f"tau {h['tau']}"])
            for h in hists
        ]
    if kind == "gaps":
        rows = payload.get("profile", [])
        return [("gaps", ("k", "distinct", "min_gap", "max_gap"), rows, [])]
    rows = payload.get("series", [])
    return [("birkhoff", ("n", "birkhoff_sum"), rows, [])]


def emit_plot_data(
    report: RunReport, kind: PlotKind, directory: Path, stem: str
) -> list[Path]:
    """Write gnuplot-style data files for ``kind``; returns the paths written."""
    expected = _PLOT_SOURCES.get(kind)
    if expected is None:
        raise InvalidInputError("plot kind", f"unknown kind {kind!r}")
    if report.experiment != expected:
        raise InvalidInputError(
            "plot kind",
            f"{kind!r} needs a {expected!r} report, got {report.experiment!r}",
        )
    written = []
    for suffix, columns, rows, comments in _plot_series(kind, report.payload):
        target = directory / f"{stem}_{suffix}.dat"
        atomic_write_text(target, columns_text(columns, rows, comments))
        written.append(target)
    return written


def load_report(path: Path) -> RunReport:
    try:
        return RunReport.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidInputError("report", f"{path}: {exc.strerror}") from exc
    except ValidationError as exc:
        raise InvalidInputError("report", f"{path}: {_summarize(exc)}") from exc


# ──────────────────────────────────────────────────────────────
# CLI
# ──────────────────────────────────────────────────────────────
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specflow", description="Special-flow numerical laboratory"
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument("--json-logs", action="store_true", help="emit JSON log lines")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario file")
    run.add_argument("scenario", type=Path)

    batch = sub.add_parser("suite", help="run all scenarios in directories or files")
    batch.add_argument("paths", type=Path, nargs="+")
    batch.add_argument("--jobs", type=int, default=1)

    plot = sub.add_parser("plot", help="extract plot data from a report")
    plot.add_argument("report", type=Path)
    plot.add_argument("--kind", required=True, choices=get_args(PlotKind))
    plot.add_argument("--out", type=Path, default=None)

    sub.add_parser("schema", help="print the scenario JSON schema")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(json_output=True if args.json_logs else None)

    if args.command == "run":
        return exit_code_for(args.scenario)
    if args.command == "suite":
        try:
            return suite(args.paths, jobs=max(1, args.jobs))
        except SpecflowError as exc:
            log.error("suite_failed", error=str(exc))
            return exc.exit_code
    if args.command == "plot":
        try:
            report = load_report(args.report)
            out = args.out or args.report.parent
            written = emit_plot_data(report, args.kind, out, args.report.stem)
        except SpecflowError as exc:
            log.error("plot_failed", error=str(exc))
            return exc.exit_code
        log.info("plot_written", files=[str(p) for p in written])
        return EXIT_OK
    sys.stdout.write(json_text(Scenario.model_json_schema()))
    return EXIT_OK
