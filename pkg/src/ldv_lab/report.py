"""Flat-file reports: comparison and calibration tables as CSV or JSON, and
spectrum plot data as CSV.

Floats are written with 17 significant digits, so every value read back
equals the value written.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .dsp import Spectrum
from .errors import InvalidInputError, ReportIOError
from .harness import CalibrationRow, ComparisonReport

CSV = "csv"
JSON = "json"
FORMATS = (CSV, JSON)

COMPARISON_COLUMNS = ("component", "truth_hz", "ldv_hz", "accel_hz", "ldv_err_hz", "accel_err_hz", "amplitude_m")
CALIBRATION_COLUMNS = (
    "applied_hz", "applied_displacement_m", "indicated_hz", "indicated_displacement_m", "tolerance_hz", "pass",
)
SPECTRUM_COLUMNS = ("frequency_hz", "magnitude", "phase_rad")


def format_float(x: float) -> str:
    return format(float(x), ".16e")


def comparison_row(r: ComparisonReport) -> dict:
    return {
        "component": r.component,
        "truth_hz": r.truth_frequency,
        "ldv_hz": r.ldv_frequency,
        "accel_hz": r.accel_frequency,
        "ldv_err_hz": r.ldv_error,
        "accel_err_hz": r.accel_error,
        "amplitude_m": r.displacement_amplitude_recovered,
    }


def calibration_row(r: CalibrationRow) -> dict:
    return {
        "applied_hz": r.applied_frequency,
        "applied_displacement_m": r.applied_displacement,
        "indicated_hz": r.indicated_frequency,
        "indicated_displacement_m": r.indicated_displacement,
        "tolerance_hz": r.tolerance,
        "pass": r.passed,
    }


def _table(rows: Sequence) -> tuple[tuple[str, ...], list[dict]]:
    if all(isinstance(r, ComparisonReport) for r in rows):
        return COMPARISON_COLUMNS, [comparison_row(r) for r in rows]
    if all(isinstance(r, CalibrationRow) for r in rows):
        return CALIBRATION_COLUMNS, [calibration_row(r) for r in rows]
    raise InvalidInputError("a report holds either comparison reports or calibration rows, not a mix")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def _json_value(value):
    # NaN and infinities are not JSON numbers
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render(rows: Sequence, fmt: str = CSV) -> str:
    """Report text for ``rows``; an empty list renders as comparison columns."""
    if fmt not in FORMATS:
        raise InvalidInputError(f"unknown report format {fmt!r}")
    columns, records = _table(rows) if rows else (COMPARISON_COLUMNS, [])
    if fmt == JSON:
        payload = [{k: _json_value(v) for k, v in rec.items()} for rec in records]
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_cell(rec[c]) for c in columns])
    return buf.getvalue()


def _write(path, text: str) -> Path:
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ReportIOError(path, exc) from exc
    return path


def emit_report(rows: Sequence, fmt: str, path) -> Path:
    return _write(path, render(rows, fmt))


def read_report(path) -> list[dict]:
    """Rows of a CSV or JSON report, numeric fields as floats."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        return json.loads(text)
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        out = {}
        for key, value in rec.items():
            if key == "component":
                out[key] = value
            elif key == "pass":
                out[key] = value == "true"
            else:
                out[key] = float(value)
        rows.append(out)
    return rows


def emit_spectrum_data(spec: Spectrum, path) -> Path:
    lines = [",".join(SPECTRUM_COLUMNS)]
    for f, m, p in zip(spec.frequency_axis, spec.magnitude, spec.phase):
        lines.append(f"{format_float(f)},{format_float(m)},{format_float(p)}")
    return _write(path, "\n".join(lines) + "\n")


def read_spectrum_data(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frequency, magnitude and phase columns of a spectrum file."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2]
