"""On-disk formats: field blocks with JSON headers, JSON summaries and CSV tables.

A field file is one line of JSON (the header, newline-terminated) followed by the
raw little-endian float64 values.  The header carries a sha256 of that block.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np

from .errors import ChecksumError
from .strip_problem import HeightField, StripGrid

FORMAT = "strata-wave-field"
FORMAT_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not JSON serialisable: {type(x).__name__}")


def config_hash(config: Dict[str, Any]) -> str:
    """Short digest of the run configuration; where the files go does not count."""
    body = {k: v for k, v in config.items() if k != "output_dir"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()[:16]


def write_json(path, obj):
    path = Path(path)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comment: Optional[str] = None):
    path = Path(path)
    with path.open("w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def save_field(path, h: HeightField, meta: Optional[Dict[str, Any]] = None):
    """Write ``h`` with its grid and any extra metadata (Q, amplitude, config hash...)."""
    block = np.ascontiguousarray(h.values, dtype="<f8").tobytes()
    header = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "shape": list(h.values.shape),
        "grid": h.grid.to_dict(),
        "sha256": hashlib.sha256(block).hexdigest(),
        "meta": meta or {},
    }
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(canonical_json(header).encode() + b"\n")
        fh.write(block)
    return path


def load_field(path):
    """Return ``(HeightField, meta)``; raises ChecksumError on any corruption."""
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ChecksumError(f"{path}: missing header")
    try:
        header = json.loads(raw[:nl].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ChecksumError(f"{path}: unreadable header ({err})") from err
    if header.get("format") != FORMAT:
        raise ChecksumError(f"{path}: not a field file")
    block = raw[nl + 1:]
    if hashlib.sha256(block).hexdigest() != header.get("sha256"):
        raise ChecksumError(f"{path}: checksum mismatch")
    shape = tuple(header["shape"])
    if len(block) != 8 * int(np.prod(shape)):
        raise ChecksumError(f"{path}: block length does not match shape {shape}")
    grid = StripGrid.from_dict(header["grid"])
    values = np.frombuffer(block, dtype="<f8").reshape(shape).astype(float)
    return HeightField(values, grid), header.get("meta", {})
