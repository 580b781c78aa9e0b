"""Binary checkpoints and CSV time series.

Checkpoint layout (all little-endian)::

    magic    4s   b"BKMD"
    version  u32
    model    8s   NUL-padded model tag
    n        u32
    box      f64  box length
    nu       f64
    t        f64
    K        f64
    count    u32  number of accumulated integrals
    values   count * f64, in INTEGRAL_NAMES order
    payload  B then (Hall-MHD) u: reduced spectra (3, n, n, n/2+1) as
             (re, im) f64 pairs, x fastest

Time series are CSV with ``#`` metadata lines before a fixed header.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import CSV_COLUMNS, INTEGRAL_NAMES
from .dynamics import SimState
from .errors import CheckpointFormatError
from .spectral import Field, Grid

MAGIC = b"BKMD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sI8sIddddI")
_COMPLEX = np.dtype("<c16")


@dataclass(frozen=True)
class Checkpoint:
    state: SimState
    integrals: dict
    K: float = 6.0


def save_checkpoint(state, integrals, path, K=6.0):
    """Write ``state`` and the accumulated integrals to ``path``."""
    g = state.grid
    values = [float((integrals or {}).get(name, 0.0)) for name in INTEGRAL_NAMES]
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, state.model.encode("ascii"), g.n, g.length,
                        float(state.nu), float(state.t), float(K), len(values))
    parts = [head, struct.pack(f"<{len(values)}d", *values), np.ascontiguousarray(state.B.data, _COMPLEX).tobytes()]
    if state.u is not None:
        parts.append(np.ascontiguousarray(state.u.data, _COMPLEX).tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_checkpoint(path):
    """Read a checkpoint written by :func:`save_checkpoint`; returns a :class:`Checkpoint`."""
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint (bad magic)")
    if len(raw) < _HEADER.size:
        raise CheckpointFormatError(f"{path}: truncated header")
    magic, version, tag, n, box, nu, t, K, count = _HEADER.unpack_from(raw)
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    model = tag.rstrip(b"\0").decode("ascii", "replace")
    if model not in ("emhd", "hallmhd"):
        raise CheckpointFormatError(f"{path}: unknown model tag {model!r}")
    if count != len(INTEGRAL_NAMES):
        raise CheckpointFormatError(f"{path}: expected {len(INTEGRAL_NAMES)} integrals, found {count}")
    try:
        grid = Grid(n, box)
    except ValueError as exc:
        raise CheckpointFormatError(f"{path}: bad grid header ({exc})") from None
    off = _HEADER.size
    values = struct.unpack_from(f"<{count}d", raw, off) if len(raw) >= off + 8 * count else None
    if values is None:
        raise CheckpointFormatError(f"{path}: truncated integrals")
    off += 8 * count
    nfield = 2 if model == "hallmhd" else 1
    shape = (3,) + grid.spectral_shape
    block = int(np.prod(shape)) * _COMPLEX.itemsize
    if len(raw) != off + nfield * block:
        raise CheckpointFormatError(f"{path}: payload is {len(raw) - off} bytes, expected {nfield * block}")
    arrays = [np.frombuffer(raw, _COMPLEX, int(np.prod(shape)), off + i * block).reshape(shape).astype(complex)
              for i in range(nfield)]
    B = Field(grid, arrays[0], True)
    u = Field(grid, arrays[1], True) if nfield == 2 else None
    state = SimState(t, B, u, model, nu)
    return Checkpoint(state, dict(zip(INTEGRAL_NAMES, values)), K)


def _cell(v):
    if v is None:
        return ""
    v = float(v)
    return repr(v) if math.isfinite(v) else str(v)


def format_timeseries(records, meta=None):
    """CSV text: ``# key: value`` metadata lines, the fixed header, one row per record."""
    lines = [f"# {k}: {v}" for k, v in (meta or {}).items()]
    lines.append(",".join(CSV_COLUMNS))
    for r in records:
        lines.append(",".join(_cell(getattr(r, c)) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def write_timeseries(records, path, meta=None):
    Path(path).write_text(format_timeseries(records, meta))


def read_timeseries(path):
    """Parse a CSV written by :func:`write_timeseries` into (meta, rows); empty cells become None."""
    meta, rows, header = {}, [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append({k: (float(v) if v else None) for k, v in zip(header, line.split(","))})
    return meta, rows


def strip_metadata(text):
    """CSV text without the ``#`` metadata lines (for determinism comparisons)."""
    return "".join(l for l in text.splitlines(keepends=True) if not l.startswith("#"))
