"""On-disk formats: diagnostics CSV, JSON-lines snapshots, run manifest.

Floats are written with ``repr`` (shortest round-trip form), so reading a
file back reproduces every value bit for bit and identical runs produce
identical bytes.  Every file is written to a temporary name and renamed
into place; on failure the temporary file is removed.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .coords import EulerianFields
from .diagnostics import DiagnosticsRecord
from .discretization import Grid
from .errors import InputError, SinkError
from .fluxes import derived_fields
from .model import PhysParams
from .solver import RunResult, Sink
from .state import State

SNAPSHOT_KEYS = ("J", "u", "wx", "wy", "hx", "hy", "P", "Fx", "Fy", "G", "H", "rho", "theta", "s")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
        tmp = None
    except OSError as exc:
        raise SinkError(path, exc.strerror or str(exc)) from exc
    finally:
        if tmp is not None and os.path.exists(tmp):
            os.unlink(tmp)


def _num(x: float) -> str:
    return repr(float(x))


def diagnostics_csv(records: Sequence[DiagnosticsRecord], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_num(v) for v in rec.row(columns)])
    return buf.getvalue()


def read_diagnostics_csv(path) -> Tuple[List[str], np.ndarray]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SinkError(path, exc.strerror or str(exc)) from exc
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def _finite_or_none(x: float) -> Optional[float]:
    return float(x) if math.isfinite(x) else None


def snapshot_text(state: State, params: PhysParams) -> str:
    """Header line ``{t, N, L, coordinate-system}`` then one object per node."""
    d = derived_fields(state, params)
    header = {"t": state.t, "N": state.grid.N, "L": state.grid.L, "coordinate-system": "lagrange"}
    cols = {"J": state.J, "u": state.u, "wx": state.w[0], "wy": state.w[1], "hx": state.h[0],
            "hy": state.h[1], "P": state.P, "Fx": d.F[0], "Fy": d.F[1], "G": d.G, "H": d.H,
            "rho": d.rho, "theta": d.theta}
    s_mask = np.ma.getmaskarray(d.s)
    s_vals = d.s.filled(0.0)
    lines = [json.dumps(header)]
    y = state.grid.y
    for i in range(state.grid.N):
        row = {"y": float(y[i])}
        for k, v in cols.items():
            row[k] = float(v[i])
        row["s"] = None if s_mask[i] else float(s_vals[i])
        lines.append(json.dumps(row))
    return "\n".join(lines) + "\n"


def eulerian_snapshot_text(ef: EulerianFields, grid: Grid) -> str:
    header = {"t": ef.t, "N": int(ef.x.size), "L": grid.L, "coordinate-system": "euler"}
    lines = [json.dumps(header)]
    s_mask = np.ma.getmaskarray(ef.s)
    s_vals = ef.s.filled(0.0)
    for i in range(ef.x.size):
        row = {"x": float(ef.x[i])}
        for k, v in ef.columns.items():
            row[k] = _finite_or_none(v[i])
        row["s"] = None if s_mask[i] else float(s_vals[i])
        lines.append(json.dumps(row))
    return "\n".join(lines) + "\n"


def write_snapshot(path, state: State, params: PhysParams) -> None:
    atomic_write(path, snapshot_text(state, params))


def read_snapshot(path) -> Tuple[dict, Dict[str, np.ndarray]]:
    """Return the header and a dict of per-node columns (``s`` may contain NaN
    where it was undefined)."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise SinkError(path, exc.strerror or str(exc)) from exc
    header = json.loads(lines[0])
    rows = [json.loads(line) for line in lines[1:]]
    if len(rows) != header["N"]:
        raise InputError(f"{path}: header announces {header['N']} nodes, found {len(rows)}")
    keys = rows[0].keys()
    cols = {k: np.array([np.nan if r[k] is None else r[k] for r in rows], dtype=float)
            for k in keys}
    return header, cols


def state_from_snapshot(header: dict, cols: Dict[str, np.ndarray], rho0: np.ndarray) -> State:
    if header.get("coordinate-system") != "lagrange":
        raise InputError("only Lagrangian snapshots can be turned back into states")
    grid = Grid(header["L"], header["N"])
    if not np.array_equal(cols["y"], grid.y):
        raise InputError("snapshot nodes do not match the grid named in its header")
    return State(header["t"], cols["J"], cols["u"], np.vstack([cols["wx"], cols["wy"]]),
                 np.vstack([cols["hx"], cols["hy"]]), cols["P"], rho0, grid)


def write_json(path, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


class MemorySink(Sink):
    def __init__(self):
        self.records: List[DiagnosticsRecord] = []
        self.snapshots: List[State] = []
        self.columns: List[str] = []

    def on_record(self, record, columns):
        self.records.append(record)
        self.columns = list(columns)

    def on_snapshot(self, state, params):
        self.snapshots.append(state.copy())


class DirectorySink(Sink):
    """Writes ``diagnostics.csv``, ``snapshots/snap_NNNNN.jsonl`` and
    ``manifest.json`` into ``out_dir``.

    ``manifest`` is the static part of the manifest; run statistics are
    added when the run closes.  With ``eulerian`` set, every Lagrangian
    snapshot gets an Eulerian companion built from the trapezoidal flow
    map of the snapshot sequence.
    """

    def __init__(self, out_dir, manifest: dict, eulerian: bool = False):
        self.out = Path(out_dir)
        self.manifest = dict(manifest)
        self.eulerian = eulerian
        self.records: List[DiagnosticsRecord] = []
        self.columns: List[str] = []
        self.count = 0
        self._eta = None
        self._prev: Optional[State] = None
        try:
            (self.out / "snapshots").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise SinkError(self.out, exc.strerror or str(exc)) from exc

    def on_record(self, record, columns):
        self.records.append(record)
        self.columns = list(columns)

    def on_snapshot(self, state, params):
        name = f"snap_{self.count:05d}"
        write_snapshot(self.out / "snapshots" / f"{name}.jsonl", state, params)
        if self.eulerian:
            from .coords import to_eulerian

            if self._prev is None:
                self._eta = state.grid.y.copy()
            else:
                self._eta = self._eta + 0.5 * (state.t - self._prev.t) * (self._prev.u + state.u)
            self._prev = state.copy()
            x = np.linspace(self._eta[0], self._eta[-1], state.grid.N)
            ef = to_eulerian(state, self._eta, x, params)
            atomic_write(self.out / "snapshots" / f"{name}.euler.jsonl",
                         eulerian_snapshot_text(ef, state.grid))
        self.count += 1

    def close(self, result: RunResult):
        atomic_write(self.out / "diagnostics.csv", diagnostics_csv(self.records, self.columns))
        man = dict(self.manifest)
        man["run"] = {
            "steps": result.steps,
            "aborted": result.aborted,
            "abort_reason": result.abort_reason,
            "final_time": result.state.t,
            "records": len(result.records),
            "snapshots": self.count,
            "J_floor": result.J_floor,
        }
        write_json(self.out / "manifest.json", man)


def list_snapshots(run_dir) -> List[Path]:
    snap_dir = Path(run_dir) / "snapshots"
    if not snap_dir.is_dir():
        raise SinkError(snap_dir, "no snapshots directory")
    return sorted(p for p in snap_dir.glob("snap_*.jsonl") if not p.name.endswith(".euler.jsonl"))
