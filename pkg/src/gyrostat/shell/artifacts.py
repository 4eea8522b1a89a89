"""Persistence: time-series CSV, eigenreport JSON, plot data and binary checkpoints."""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import Cavity, SystemSetup, build_system
from ..dynamics import NONLINEAR, DiagnosticsRow, State
from ..errors import FormatError
from ..fields import FaceField

CSV_COLUMNS = (
    "t", "om_x", "om_y", "om_z", "M_norm", "a_x", "a_y", "a_z",
    "E", "scriptE", "G", "V", "l2v", "h1v", "E1", "energy_residual",
)


def _num(x: float) -> str:
    return repr(float(x))


def row_values(row: DiagnosticsRow) -> list[float]:
    return [
        row.t, *row.omega, row.M_norm, *row.a,
        row.E, row.script_E, row.G, row.V, row.l2v, row.h1v, row.E1, row.energy_residual,
    ]


def timeseries_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_num(x) for x in row_values(row)])
    return buf.getvalue()


def write_timeseries(rows, path) -> Path:
    path = Path(path)
    path.write_text(timeseries_text(rows), encoding="utf-8")
    return path


def read_timeseries(path) -> dict[str, np.ndarray]:
    """Columns of a CSV written by :func:`write_timeseries` (or any numeric CSV)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        try:
            data = [[float(x) for x in rec] for rec in reader if rec]
            arr = np.array(data, dtype=float).reshape(-1, len(header))
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return {name: arr[:, k] for k, name in enumerate(header)}


def write_plot_files(rows, directory, prefix: str = "") -> list[Path]:
    """One two-column ``t value`` file per diagnostic, for gnuplot and friends."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    table = np.array([row_values(r) for r in rows])
    out = []
    for k, name in enumerate(CSV_COLUMNS[1:], start=1):
        path = directory / f"{prefix}{name}.dat"
        lines = [f"# t {name}"] + [f"{_num(t)} {_num(y)}" for t, y in zip(table[:, 0], table[:, k])]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out.append(path)
    return out


# -- eigenreport ----------------------------------------------------------------------


def eigreport_document(report, extra: dict | None = None) -> dict:
    lam = np.asarray(report.eigenvalues)
    doc = {
        "verdict": report.verdict,
        "zero_multiplicity": int(report.zero_multiplicity),
        "m_expected": report.m_expected,
        "semisimple": bool(report.semisimple),
        "cluster_radius": report.cluster_radius,
        "min_real_nonzero": report.min_real,
        "min_abs_real_nonzero": report.min_abs_real,
        "eigenvalues": [[float(z.real), float(z.imag)] for z in lam],
    }
    if extra:
        doc.update(extra)
    return doc


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(doc: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path


def write_eigreport(report, path, extra: dict | None = None) -> Path:
    return write_json(eigreport_document(report, extra), path)


# -- checkpoints ------------------------------------------------------------------------

MAGIC = b"LGY1"
VERSION = 1
_HEADER = struct.Struct("<4sI3I3dd3d3ddQ")


@dataclass(frozen=True, eq=False)
class Checkpoint:
    state: State
    setup: SystemSetup
    version: int = VERSION

    @property
    def fingerprint(self) -> str:
        return self.setup.fingerprint()


def checkpoint_bytes(state: State, setup: SystemSetup) -> bytes:
    cav = setup.cavity
    head = _HEADER.pack(
        MAGIC, VERSION, *cav.grid, *cav.dims, setup.nu, *setup.inertia.moments,
        *setup.omega0, float(state.t), int(state.step),
    )
    parts = [head]
    for comp in state.v.components:
        parts.append(np.ascontiguousarray(comp, dtype="<f8").tobytes())
    for vec in (state.omega, state.omega_prev, state.M):
        parts.append(np.asarray(vec, dtype="<f8").tobytes())
    return b"".join(parts)


def write_checkpoint(state: State, setup: SystemSetup, path) -> Path:
    path = Path(path)
    path.write_bytes(checkpoint_bytes(state, setup))
    return path


def parse_checkpoint(blob: bytes, mode: str = NONLINEAR, deg_tol: float | None = None) -> Checkpoint:
    """Decode checkpoint bytes.

    The layout carries no mode flag, so the caller states how the angular
    velocity is to be read (full rotation or perturbation).
    """
    if len(blob) < _HEADER.size:
        raise FormatError("checkpoint truncated in header")
    magic, version, nx, ny, nz, lx, ly, lz, nu, A, B, C, w0x, w0y, w0z, t, step = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    shapes = ((nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1))
    need = _HEADER.size + 8 * (sum(int(np.prod(s)) for s in shapes) + 9)
    if len(blob) != need:
        raise FormatError(f"checkpoint has {len(blob)} bytes, expected {need}")
    kwargs = {} if deg_tol is None else {"deg_tol": deg_tol}
    zero_ok = not any((w0x, w0y, w0z))
    setup = build_system((lx, ly, lz), (nx, ny, nz), nu, (A, B, C), (w0x, w0y, w0z),
                         allow_zero_omega=zero_ok, **kwargs)
    pos = _HEADER.size
    comps = []
    for s in shapes:
        n = int(np.prod(s))
        comps.append(np.frombuffer(blob, dtype="<f8", count=n, offset=pos).reshape(s).astype(float))
        pos += 8 * n
    vecs = np.frombuffer(blob, dtype="<f8", count=9, offset=pos).astype(float)
    v = FaceField(*comps, Cavity((lx, ly, lz), (nx, ny, nz)))
    state = State(v, vecs[0:3].copy(), vecs[3:6].copy(), vecs[6:9].copy(), t, int(step), mode)
    return Checkpoint(state, setup, version)


def read_checkpoint(path, mode: str = NONLINEAR, deg_tol: float | None = None) -> Checkpoint:
    return parse_checkpoint(Path(path).read_bytes(), mode, deg_tol)


def checkpoint_summary(ck: Checkpoint) -> dict:
    s, setup = ck.state, ck.setup
    return {
        "version": ck.version,
        "grid": list(setup.cavity.grid),
        "dims": list(setup.cavity.dims),
        "nu": setup.nu,
        "moments": list(setup.inertia.moments),
        "omega0": list(setup.omega0),
        "t": s.t,
        "step": s.step,
        "omega": s.omega.tolist(),
        "M": s.M.tolist(),
        "M_norm": float(np.linalg.norm(s.M)),
        "fingerprint": ck.fingerprint,
    }
