"""File formats for grids, modes, scans and reports.

Binary grid layout (little-endian)::

    offset  size  field
    0       8     magic b"JSFGRID\\0"
    8       4     n_s (uint32)
    12      4     n_i (uint32)
    16      32    omega_s_min, omega_s_max, omega_i_min, omega_i_max (float64)
    48      16*n  re, im (float64) per cell, row-major over (s, i)
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .grid import JsfGrid, SpectralGrid
from .units import wavelength_from_omega

MAGIC = b"JSFGRID\0"
HEADER = struct.Struct("<8sII4d")


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def grid_csv_text(grid: SpectralGrid, values: np.ndarray) -> str:
    lam_s = wavelength_from_omega(grid.omega_s_axis) * 1e9
    lam_i = wavelength_from_omega(grid.omega_i_axis) * 1e9
    buf = _io.StringIO()
    buf.write("lambda_s_nm,lambda_i_nm,re,im,abs2\n")
    vals = np.asarray(values, dtype=complex)
    li = [repr(x) for x in lam_i.tolist()]
    for p in range(grid.n_s):
        ls = repr(float(lam_s[p]))
        for q, v in enumerate(vals[p].tolist()):
            buf.write(f"{ls},{li[q]},{v.real!r},{v.imag!r},{abs(v) ** 2!r}\n")
    return buf.getvalue()


def write_grid_csv(path: Path, grid: SpectralGrid, values: np.ndarray) -> Path:
    path = Path(path)
    path.write_text(grid_csv_text(grid, values), encoding="utf-8", newline="")
    return path


def read_grid_csv(path: Path, n_s: int, n_i: int) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return (data[:, 2] + 1j * data[:, 3]).reshape(n_s, n_i)


def grid_bytes(grid: SpectralGrid, values: np.ndarray) -> bytes:
    vals = np.ascontiguousarray(values, dtype="<c16")
    head = HEADER.pack(MAGIC, grid.n_s, grid.n_i,
                       grid.omega_s_axis[0], grid.omega_s_axis[-1],
                       grid.omega_i_axis[0], grid.omega_i_axis[-1])
    return head + vals.tobytes()


def write_grid_bin(path: Path, grid: SpectralGrid, values: np.ndarray) -> Path:
    path = Path(path)
    path.write_bytes(grid_bytes(grid, values))
    return path


def read_grid_bin(path: Path) -> tuple[SpectralGrid, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise DomainError("file too short for a grid header")
    magic, n_s, n_i, s0, s1, i0, i1 = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DomainError("not a JSF grid file")
    expected = HEADER.size + 16 * n_s * n_i
    if len(raw) != expected:
        raise DomainError(f"grid payload size {len(raw)} != expected {expected}")
    vals = np.frombuffer(raw, dtype="<c16", offset=HEADER.size).reshape(n_s, n_i).copy()
    return SpectralGrid.from_omega_bounds(s0, s1, i0, i1, n_s, n_i), vals


def write_jsf(path_stem: Path, jsf: JsfGrid, fmt: str = "csv") -> Path:
    if fmt == "csv":
        return write_grid_csv(Path(f"{path_stem}.csv"), jsf.grid, jsf.values)
    if fmt == "bin":
        return write_grid_bin(Path(f"{path_stem}.bin"), jsf.grid, jsf.values)
    raise DomainError("format must be 'csv' or 'bin'")


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) if not isinstance(x, str) else x for x in row])
    return path


def write_mode_csv(path: Path, omega: np.ndarray, mode: np.ndarray) -> Path:
    return write_rows(path, ("omega_rad_s", "re", "im"),
                      ((w, v.real, v.imag) for w, v in zip(omega, mode)))


def write_scan_csv(path: Path, rows) -> Path:
    return write_rows(path, ("dlambda_f_nm", "g2s", "g2i", "xi_s", "xi_i"),
                      ((r.dlambda_f_nm, r.g2s, r.g2i, r.xi_s, r.xi_i) for r in rows))


def write_mode_index_csv(path: Path, table: Iterable[tuple[int, float, float]]) -> Path:
    return write_rows(path, ("k", "coefficient", "G"),
                      ((str(k), c, g) for k, c, g in table))


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(json_text(obj), encoding="utf-8")
    return path


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
