"""Scenario execution: initial data, recording, checkpoints, CSV/JSON/PNG output."""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .diagnostics import (CSV_COLUMNS, RecordOptions, derivative_monitor, envelope_check,
                          record_state, recorder)
from .errors import CheckpointError
from .flows import GaugeData
from .integrator import (COMPLETED, INSTABILITY, MAP_LEFT_DOMAIN, POSITIVITY_LOST, RunResult,
                         run_flow)
from .scenario import Scenario, initial_data, parse_scenario

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_POSITIVITY = 4
EXIT_INSTABILITY = 5
EXIT_MAP_LEFT_DOMAIN = 6
EXIT_VERIFY = 7
EXIT_CHECKPOINT = 8

EXIT_CODES = {
    COMPLETED: EXIT_OK,
    POSITIVITY_LOST: EXIT_POSITIVITY,
    INSTABILITY: EXIT_INSTABILITY,
    MAP_LEFT_DOMAIN: EXIT_MAP_LEFT_DOMAIN,
}

FINAL_STATE = "final.imck"


class CsvSink:
    """Appends one row per record; floats in shortest round-trip form."""

    def __init__(self, path, header=True):
        self.fh = open(path, "w", newline="", encoding="utf-8")
        self.writer = csv.writer(self.fh)
        if header:
            self.writer.writerow(CSV_COLUMNS)

    def __call__(self, rec):
        self.writer.writerow([repr(float(v)) for v in rec.row()])
        self.fh.flush()

    def close(self):
        self.fh.close()


def emit_timeseries(records, path) -> None:
    """Write a whole record sequence as one CSV file."""
    sink = CsvSink(path)
    try:
        for rec in records:
            sink(rec)
    finally:
        sink.close()


def read_timeseries(path):
    """Rows of a CSV written by :class:`CsvSink`, as float arrays keyed by column."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(CSV_COLUMNS))
    return {c: data[:, i] for i, c in enumerate(CSV_COLUMNS)}


def _options(sc: Scenario, M_bound: float) -> RecordOptions:
    d = sc.diagnostics
    return RecordOptions(d.residuals, d.monotonicity, d.sectional, d.derivatives, M_bound)


@dataclass
class RunOutcome:
    exit_code: int
    summary: dict
    result: RunResult | None = None
    out_dir: Path | None = None


def _constants(rec0, sc: Scenario) -> dict:
    M = sc.diagnostics.M_bound or math.sqrt(rec0.A2_max) or 1.0
    return {"H0_min": rec0.H_min, "H0_max": rec0.H_max, "A20_max": rec0.A2_max,
            "eps0": rec0.eps, "beta0": rec0.beta, "M_bound": M}


def _checks(records, sc: Scenario, constants: dict) -> dict:
    """Verdicts for the envelope, pinching and monotonicity claims on a run."""
    n = sc.domain.n
    tau = sc.tau
    out = {"tau": tau}
    if constants["H0_min"] > 0 and records:
        rep = envelope_check(records, n, constants["H0_min"], constants["H0_max"],
                             constants["A20_max"], tau, raise_on_violation=False)
        out["envelopes"] = {"ok": rep.ok, "verdicts": rep.verdicts(), "worst_margin": rep.worst(),
                            "violations": rep.violations[:20]}
        eps = np.array([r.eps for r in records])
        beta = np.array([r.beta for r in records])
        H = np.array([r.H_min for r in records])
        out["pinching"] = {
            "ok": bool(np.all(eps >= constants["eps0"] - tau) and np.all(beta <= constants["beta0"] + tau)),
            "eps_min": float(np.nanmin(eps)), "beta_max": float(np.nanmax(beta)),
            "H_positive": bool(np.all(H > 0)),
        }
    else:
        out["envelopes"] = {"ok": None, "reason": "initial H is not positive"}
    F = np.array([r.F_n for r in records])
    if sc.domain.kind != "patch" and np.all(np.isfinite(F)) and len(F) > 1:
        rise = float(np.max(np.diff(F) / np.abs(F[:-1])))
        out["monotonicity"] = {"ok": bool(rise <= tau), "max_relative_rise": rise}
    if sc.diagnostics.derivatives and records:
        ds = derivative_monitor(records, constants["M_bound"], sc.diagnostics.s_budget)
        out["derivatives"] = {"sup_s1": ds.sup_s1, "sup_s2": ds.sup_s2, "flags": ds.flags}
    return out


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _finish(sc, out_dir, result, records, constants, wall, start_step, resumed_from=None):
    out = sc.output
    exit_code = EXIT_CODES.get(result.reason, EXIT_FAILURE)
    save_checkpoint(out_dir / FINAL_STATE, Checkpoint(
        result.final, result.steps, sc.text, sc.digest, result.gauge, constants))
    figures = []
    if out.figures:
        from .plotting import render_report
        figures = render_report(records, out_dir, sc.domain.n, constants)
    summary = {
        "scenario": sc.name,
        "scenario_hash": sc.digest,
        "seed": sc.seed,
        "variant": sc.variant,
        "domain": sc.domain.descriptor(),
        "termination": result.reason,
        "message": result.message,
        "exit_code": exit_code,
        "steps": result.steps,
        "start_step": start_step,
        "t_final": result.final.t,
        "records": len(records),
        "wall_time_s": wall,
        "constants": constants,
        "checks": _checks(records, sc, constants),
        "files": {"csv": out.csv, "final_state": FINAL_STATE, "figures": figures},
    }
    if resumed_from is not None:
        summary["resumed_from"] = str(resumed_from)
    (out_dir / out.summary).write_text(json.dumps(_json_safe(summary), indent=2), encoding="utf-8")
    return RunOutcome(exit_code, summary, result, out_dir)


def _checkpointer(sc, out_dir, constants):
    def save(st, step, gauge):
        g = None
        if gauge is not None:
            g = GaugeData(s=gauge.s, F=np.array(gauge.F, copy=True))
        save_checkpoint(out_dir / sc.output.checkpoint,
                        Checkpoint(st, step, sc.text, sc.digest, g, constants))
    return save


def execute_scenario(sc: Scenario, out_dir) -> RunOutcome:
    """Run a validated scenario and write its outputs into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    st0, boundary, gauge = initial_data(sc)
    probe = record_state(st0, RecordOptions(residuals=False, monotonicity=False, sectional=False,
                                            derivatives=False))
    constants = _constants(probe, sc)
    options = _options(sc, constants["M_bound"])
    rec0 = record_state(st0, options)
    sink = CsvSink(out_dir / sc.output.csv)
    try:
        sink(rec0)
        result = run_flow(st0, sc.variant, sc.step, (sink,), record=recorder(options),
                          boundary=boundary, gauge=gauge, record_initial=False,
                          on_checkpoint=_checkpointer(sc, out_dir, constants),
                          transport=sc.transport)
    finally:
        sink.close()
    records = [rec0] + result.records
    return _finish(sc, out_dir, result, records, constants, time.perf_counter() - t0, 0)


def resume_checkpoint(path, out_dir=None) -> RunOutcome:
    """Continue a run from a checkpoint to the scenario's ``t_end``.

    The CSV written here holds the rows recorded after the checkpoint step.
    """
    ck = load_checkpoint(path)
    sc = parse_scenario(ck.scenario_text)
    if sc.digest != ck.scenario_hash:
        raise CheckpointError("embedded scenario text does not match its hash")
    out_dir = Path(out_dir) if out_dir is not None else Path(path).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    _, boundary, _ = initial_data(sc)
    constants = ck.constants
    options = _options(sc, constants["M_bound"])
    sink = CsvSink(out_dir / sc.output.csv)
    try:
        result = run_flow(ck.state, sc.variant, sc.step, (sink,), record=recorder(options),
                          boundary=boundary, gauge=ck.gauge, start_step=ck.step,
                          record_initial=False, on_checkpoint=_checkpointer(sc, out_dir, constants),
                          transport=sc.transport)
    finally:
        sink.close()
    return _finish(sc, out_dir, result, result.records, constants,
                   time.perf_counter() - t0, ck.step, resumed_from=path)


def run_file(path, out_root) -> RunOutcome:
    """Parse ``path`` and run it into ``out_root/<scenario name>``."""
    sc = parse_scenario(Path(path).read_text(encoding="utf-8"))
    return execute_scenario(sc, Path(out_root) / sc.name)

