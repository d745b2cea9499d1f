"""Run summaries and deterministic CSV/JSON writers."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from leakybox.observables import CSV_COLUMNS, RunRecord


def fmt(x) -> str:
    """17 significant digits, scientific notation."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.16e}"


def record_csv(record: RunRecord) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    cols = record.columns()
    for i in range(len(record)):
        writer.writerow([fmt(cols[c][i]) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(row[h]) for h in header])
    return buf.getvalue()


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def fitted_decay_rate(record: RunRecord) -> float:
    """Least-squares slope of ``-log <N>`` against time."""
    a = record.as_arrays()
    ok = a["mean_N"] > 0
    if ok.sum() < 2:
        return float("nan")
    slope = np.polyfit(a["t"][ok], np.log(a["mean_N"][ok]), 1)[0]
    return float(-slope)


def analytic_residuals(record: RunRecord) -> dict:
    """Largest departures from the mean-decay, Fano-relaxation, and phase-rotation laws.

    The analytic curves use ``integral j dt`` over the recorded times. The
    phase residual is reported only when every step was recorded and every
    phase was defined.
    """
    a = record.as_arrays()
    decay = np.exp(-record.integrated_rate())
    mean_res = float(np.max(np.abs(a["mean_N"] / (a["mean_N"][0] * decay) - 1.0)))
    f0 = a["fano"][0]
    fano_pred = 1.0 + (f0 - 1.0) * decay
    fano_res = float(np.max(np.abs(a["fano"] - fano_pred)))
    phase_res = None
    if record.meta.get("record_every") == 1 and all(record.phase_defined) and len(record) > 1:
        dphi = np.angle(np.exp(1j * np.diff(a["phase"])))
        expected = -a["mu_t"][:-1] * np.diff(a["t"])
        phase_res = float(np.max(np.abs(dphi / expected - 1.0)))
    return {
        "mean_decay_max_rel": mean_res,
        "fano_relaxation_max_abs": fano_res,
        "phase_rotation_max_rel": phase_res,
    }


def run_summary(record: RunRecord, config: dict | None = None) -> dict:
    a = record.as_arrays()
    return {
        "config": config,
        "fitted_decay_rate": fitted_decay_rate(record),
        "final": {
            "t": a["t"][-1],
            "mean_N": a["mean_N"][-1],
            "var_N": a["var_N"][-1],
            "fano": a["fano"][-1],
            "purity": a["purity"][-1],
            "fidelity_csib": a["fidelity_csib"][-1],
        },
        "final_purity": a["purity"][-1],
        "purity_min": float(a["purity"].min()),
        "fidelity_min": float(a["fidelity_csib"].min()),
        "residuals": analytic_residuals(record),
        "steps": record.meta.get("steps"),
        "n_max": record.meta.get("n_max"),
        "warnings": record.meta.get("warnings", []),
    }
