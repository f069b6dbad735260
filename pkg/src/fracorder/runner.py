"""Run a configured scenario and write plot-ready tables."""

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .objective import Optimality
from .optimize import cost_curve, grid_scan, newton_refine, OptimizeReport, working_domain

COST_COLUMNS = ("s", "J", "dJ", "d2J", "tracking", "penalty")
TRACE_COLUMNS = ("iteration", "step", "s", "J", "dJ", "d2J")
SNAPSHOT_COLUMNS = ("s", "t", "x", "y")
REFINE_POINTS = 16

EXIT_OK = 0
EXIT_FIRST_ORDER = 2
EXIT_NOT_STATIONARY = 3


def _version():
    from . import __version__
    return __version__


@dataclass
class RunArtifacts:
    config: object
    report: OptimizeReport
    cost_curve: list
    trace: list
    snapshots: list
    summary: dict

    @property
    def exit_code(self):
        return exit_code(self.report)


def exit_code(report):
    if report.fallback or report.verdict is Optimality.NOT_STATIONARY:
        return EXIT_NOT_STATIONARY
    if report.verdict is Optimality.FIRST_ORDER_STATIONARY:
        return EXIT_FIRST_ORDER
    return EXIT_OK


def curve_rows(scenario, spec, s_values):
    """Rows ``(s, J, dJ, d2J, tracking, penalty)``; points where evaluation
    fails or is non-finite are dropped."""
    rows = []
    for rep in cost_curve(scenario, spec, s_values, order=2):
        if rep is None:
            continue
        row = (rep.s, rep.J, rep.dJ, rep.d2J, rep.tracking, rep.penalty)
        if all(math.isfinite(v) for v in row):
            rows.append(row)
    return rows


def _snapshot(scenario, s, t, n_points):
    basis = scenario.state.basis
    x = basis.grid(n_points)
    y_modes = scenario.state.trajectories(s, np.array([t]), order=0)[0][:, 0]
    y = y_modes @ basis.evaluate(x)
    return [(s, t, float(xi), float(yi)) for xi, yi in zip(x, y)]


def run(config):
    """Optimize the configured scenario and collect every requested artifact."""
    scenario, spec = config.build()
    opt = config.optimizer
    scan = grid_scan(scenario, spec, opt)
    refined = newton_refine(scenario, spec, scan.bracket, scan.best, opt)
    report = OptimizeReport(
        refined.s_star, refined.J_star, refined.dJ_star, refined.d2J_star,
        refined.iterations, refined.verdict, scan.bracket, refined.newton_steps,
        refined.fallback, scan.local_minima)

    curve = []
    if "cost_curve" in config.outputs:
        lo, hi = working_domain(spec)
        # local refinement: a uniform patch over the scan bracket plus s_star itself
        extra = np.linspace(*scan.bracket, REFINE_POINTS)
        s_values = np.unique(np.concatenate((scan.s, extra, [report.s_star])))
        s_values = s_values[(s_values >= lo) & (s_values <= hi)]
        curve = curve_rows(scenario, spec, s_values)

    trace = [(i, it.step, it.s, it.J, it.dJ, it.d2J)
             for i, it in enumerate(report.iterations)]

    snapshots = []
    if "snapshots" in config.outputs:
        snapshots = [_snapshot(scenario, s, t, config.snapshot_points)
                     for s, t in config.snapshots]

    basis = scenario.state.basis
    summary = {
        "tool": "fracorder",
        "version": _version(),
        "scenario": config.name,
        "report": report.summary(),
        "exit_code": exit_code(report),
        "truncation": {
            "J_max": basis.J_max,
            "note": f"results refer to the problem truncated to {basis.J_max} modes",
        },
        "config": config.to_dict(),
    }
    return RunArtifacts(config, report, curve, trace, snapshots, summary)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def emit(artifacts, out_dir, formats=("csv", "json")):
    """Write the requested artifacts under ``out_dir``; returns the written paths."""
    formats = set(formats)
    unknown = formats - {"csv", "json"}
    if unknown:
        raise ValueError(f"unknown format(s): {', '.join(sorted(unknown))}")
    outputs = artifacts.config.outputs
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        if "json" in formats and "summary" in outputs:
            path = os.path.join(out_dir, "summary.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(_jsonable(artifacts.summary), fh, indent=2, sort_keys=True,
                          allow_nan=False)
                fh.write("\n")
            written.append(path)
        if "csv" in formats:
            if "cost_curve" in outputs:
                path = os.path.join(out_dir, "cost_curve.csv")
                _write_csv(path, COST_COLUMNS, artifacts.cost_curve)
                written.append(path)
            if "trace" in outputs:
                path = os.path.join(out_dir, "trace.csv")
                _write_csv(path, TRACE_COLUMNS, artifacts.trace)
                written.append(path)
            if artifacts.snapshots:
                snap_dir = os.path.join(out_dir, "snapshots")
                os.makedirs(snap_dir, exist_ok=True)
                for k, rows in enumerate(artifacts.snapshots):
                    path = os.path.join(snap_dir, f"snapshot_{k:03d}.csv")
                    _write_csv(path, SNAPSHOT_COLUMNS, rows)
                    written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write {exc.filename or out_dir}: {exc.strerror}") from exc
    return written
