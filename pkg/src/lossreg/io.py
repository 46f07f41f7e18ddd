"""Field containers, CSV tables and atomically written JSON.

Binary field layout (little endian):
    magic b"LRFD" | u32 version | u32 dim | u32 N | f64 L | N**dim complex64 pairs
Phase-space layout:
    magic b"LRPS" | u32 version | u32 dim | u32 N | f64 L | u32 M | f64 Xi | f64 eps | M*N complex64
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .spectral import Grid

FIELD_MAGIC = b"LRFD"
PHASE_MAGIC = b"LRPS"
VERSION = 1
_GRID = struct.Struct("<4sIIId")
_XI = struct.Struct("<Idd")


class ContainerError(ValueError):
    pass


def _atomic_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644)  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(path, grid: Grid, values: np.ndarray) -> None:
    vals = np.asarray(grid.check(values)).astype("<c8")
    _atomic_bytes(path, _GRID.pack(FIELD_MAGIC, VERSION, grid.dim, grid.N, grid.L) + vals.tobytes())


def read_field(path) -> tuple[Grid, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _GRID.size:
        raise ContainerError(f"{path}: truncated header")
    magic, ver, dim, N, L = _GRID.unpack_from(raw)
    if magic != FIELD_MAGIC or ver != VERSION:
        raise ContainerError(f"{path}: not a field container (magic={magic!r}, version={ver})")
    grid = Grid(dim, N, L)
    body = raw[_GRID.size:]
    if len(body) != 8 * N**dim:
        raise ContainerError(f"{path}: expected {N**dim} samples, found {len(body) // 8}")
    return grid, np.frombuffer(body, dtype="<c8").reshape(grid.shape).astype(complex)


def write_phase_space(path, grid: Grid, xi_points: int, xi_extent: float, eps: float,
                      values: np.ndarray) -> None:
    vals = np.asarray(values)
    if vals.shape != (xi_points, grid.N):
        raise ContainerError(f"phase-space values have shape {vals.shape}, expected {(xi_points, grid.N)}")
    head = _GRID.pack(PHASE_MAGIC, VERSION, grid.dim, grid.N, grid.L) + _XI.pack(xi_points, xi_extent, eps)
    _atomic_bytes(path, head + vals.astype("<c8").tobytes())


def read_phase_space(path):
    """Returns ``(grid, xi_points, xi_extent, eps, values)``."""
    raw = Path(path).read_bytes()
    magic, ver, dim, N, L = _GRID.unpack_from(raw)
    if magic != PHASE_MAGIC or ver != VERSION:
        raise ContainerError(f"{path}: not a phase-space container")
    M, Xi, eps = _XI.unpack_from(raw, _GRID.size)
    body = raw[_GRID.size + _XI.size:]
    if len(body) != 8 * M * N:
        raise ContainerError(f"{path}: expected {M * N} samples")
    vals = np.frombuffer(body, dtype="<c8").reshape(M, N).astype(complex)
    return Grid(dim, N, L), M, Xi, eps, vals


def write_field_csv(path, grid: Grid, values: np.ndarray) -> None:
    if grid.dim != 1:
        raise ContainerError("CSV export is 1D only")
    vals = np.asarray(grid.check(values), dtype=complex)
    write_csv(path, ("x", "re", "im"), zip(grid.x1d, vals.real, vals.imag))


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, header, rows) -> None:
    """CSV with a header row; floats written with ``repr`` so they round-trip exactly."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf)
    w.writerow(list(header))
    for r in rows:
        w.writerow([_cell(c) for c in r])
    _atomic_bytes(Path(path), buf.getvalue().encode())


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _finite(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    return obj


def write_json(path, obj) -> None:
    text = json.dumps(_finite(obj), indent=2, sort_keys=True, default=_default, allow_nan=False)
    _atomic_bytes(Path(path), (text + "\n").encode())


def read_json(path):
    return json.loads(Path(path).read_text())
