"""Bit-exact file formats: probability/mask vector files and sample manifests.

Vector files come in two encodings, auto-detected by magic bytes:

  TEXT    UTF-8, one decimal number per line, optional trailing newline.
  BINARY  magic b"SSV1", then an unsigned 32-bit little-endian count n,
          then n IEEE-754 32-bit little-endian values.

A manifest is a CSV with header ``sample_id,prob_path`` or
``sample_id,prob_path,truth_path``; paths are resolved relative to the
manifest's directory.
"""

import csv
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .core import as_binary_mask, as_prob_vector

__all__ = [
    "MAGIC",
    "read_vector_file",
    "write_vector_text",
    "write_vector_binary",
    "ManifestRow",
    "read_manifest",
    "atomic_write_text",
]

MAGIC = b"SSV1"


def write_vector_text(path, values) -> None:
    values = np.asarray(values, dtype=np.float64)
    lines = "".join(f"{v:.17g}\n" for v in values)
    atomic_write_text(path, lines)


def write_vector_binary(path, values) -> None:
    values = np.asarray(values, dtype=np.float32)
    payload = MAGIC + struct.pack("<I", values.size) + values.astype("<f4").tobytes()
    _atomic_write_bytes(path, payload)


def _parse_binary(data: bytes, path) -> np.ndarray:
    if len(data) < 8:
        raise ValueError(f"{path}: short read, binary header needs 8 bytes")
    (count,) = struct.unpack("<I", data[4:8])
    expected = 8 + 4 * count
    if len(data) < expected:
        raise ValueError(f"{path}: short read, expected {expected} bytes for n={count}")
    if len(data) > expected:
        raise ValueError(f"{path}: trailing bytes after {count} values")
    return np.frombuffer(data, dtype="<f4", offset=8, count=count).astype(np.float64)


def _parse_text(data: bytes, path) -> np.ndarray:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValueError(f"{path}: not UTF-8 text and no known magic bytes") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    values = np.empty(len(lines))
    for lineno, line in enumerate(lines, start=1):
        try:
            values[lineno - 1] = float(line.strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: cannot parse {line!r} as a number") from exc
    return values


def read_vector_file(path, kind: str = "prob") -> np.ndarray:
    """Read a probability vector (kind="prob") or binary mask (kind="mask").

    The encoding is auto-detected from the magic bytes. Values are validated:
    probabilities must lie in [0, 1], masks must be exactly 0 or 1; the error
    message carries the offending position.
    """
    if kind not in ("prob", "mask"):
        raise ValueError(f"kind must be 'prob' or 'mask', got {kind!r}")
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        values = _parse_binary(data, path)
    else:
        values = _parse_text(data, path)
    if values.size == 0:
        raise ValueError(f"{path}: vector file is empty")
    bad = ~((values >= 0.0) & (values <= 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"{path}: value {values[i]!r} at position {i} outside [0, 1]")
    if kind == "mask":
        nonbinary = ~((values == 0.0) | (values == 1.0))
        if nonbinary.any():
            i = int(np.flatnonzero(nonbinary)[0])
            raise ValueError(f"{path}: mask value {values[i]!r} at position {i} not in {{0, 1}}")
        return as_binary_mask(values)
    return as_prob_vector(values)


@dataclass(frozen=True)
class ManifestRow:
    sample_id: str
    prob_path: Path
    truth_path: Optional[Path]


def read_manifest(path) -> List[ManifestRow]:
    """Parse a manifest CSV; ids must be unique and referenced files must exist."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty manifest") from None
        header = [h.strip() for h in header]
        if header[:2] != ["sample_id", "prob_path"] or header not in (
            ["sample_id", "prob_path"],
            ["sample_id", "prob_path", "truth_path"],
        ):
            raise ValueError(
                f"{path}: manifest header must be 'sample_id,prob_path[,truth_path]'"
            )
        has_truth = len(header) == 3
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
            sample_id = record[0].strip()
            if not sample_id:
                raise ValueError(f"{path}:{lineno}: empty sample_id")
            prob_path = path.parent / record[1].strip()
            truth_field = record[2].strip() if has_truth else ""
            truth_path = path.parent / truth_field if truth_field else None
            rows.append(ManifestRow(sample_id, prob_path, truth_path))
    if not rows:
        raise ValueError(f"{path}: manifest has no rows")
    ids = [row.sample_id for row in rows]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate sample_ids in manifest")
    for row in rows:
        if not row.prob_path.is_file():
            raise ValueError(f"{path}: sample {row.sample_id}: missing file {row.prob_path}")
        if row.truth_path is not None and not row.truth_path.is_file():
            raise ValueError(f"{path}: sample {row.sample_id}: missing file {row.truth_path}")
    return rows


def _atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(payload)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def atomic_write_text(path, text: str) -> None:
    """Write text through a temp file and rename, so failures leave no partial file."""
    _atomic_write_bytes(path, text.encode("utf-8"))
