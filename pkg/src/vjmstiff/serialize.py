"""Serialization of results: CSV tables, JSON documents and atomic file writes.

CSV floats are written with 17 significant digits; JSON uses Python's shortest
round-trip float representation. Both re-parse to the exact in-memory values.
Non-finite numbers become ``nan``/``inf`` in CSV and ``null`` in JSON.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .analysis import BucklingReport, SweepCurve
from .equilibrium import EquilibriumState
from .stiffness import StiffnessResult

SWEEP_COLUMNS = ("delta_m", "force_n", "tangent_n_per_m", "iterations", "restarts", "critical_flag")


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return "" if value is None else str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def _plain(obj):
    """Recursively convert numpy values to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def json_text(obj) -> str:
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def atomic_write(path: str | Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# ---------------------------------------------------------------------------
# documents


def sweep_rows(curve: SweepCurve) -> list[tuple]:
    return [(s.delta, s.force, s.tangent, s.iterations, s.restarts, s.critical) for s in curve.samples]


def sweep_csv(curve: SweepCurve) -> str:
    return csv_text(SWEEP_COLUMNS, sweep_rows(curve))


def sweep_json(curve: SweepCurve) -> str:
    return json_text(
        {
            "direction": curve.direction,
            "step_m": curve.step,
            "delta_max_m": curve.delta_max,
            "failure": curve.failure,
            "samples": [dict(zip(SWEEP_COLUMNS, row)) for row in sweep_rows(curve)],
        }
    )


def report_document(report: BucklingReport, curve: SweepCurve | None = None, assumed_geometry: dict | None = None) -> dict:
    doc = report.as_dict()
    doc["assumed_geometry"] = assumed_geometry or {}
    if curve is not None:
        doc["samples"] = len(curve.samples)
        doc["failure"] = curve.failure
    return doc


def state_document(state: EquilibriumState) -> dict:
    return {
        "q": state.q,
        "theta": state.theta,
        "F": state.F,
        "position": state.pose.position,
        "orientation": state.pose.orientation,
        "iterations": state.iterations,
        "restarts": state.restarts,
        "residual_pose": state.residual_pose,
        "residual_static": state.residual_static,
        "converged": state.converged,
        "stable": state.stable,
    }


def equilibrium_document(state: EquilibriumState, result: StiffnessResult) -> dict:
    doc = state_document(state)
    doc.update(
        {
            "K": result.K,
            "eigenvalues": result.spectrum,
            "critical": result.critical,
            "singular": result.singular,
            "mode": result.mode,
            "spring_block_min_eig": result.spring_block_min_eig,
        }
    )
    return doc
