"""File formats and atomic output handling.

Binary formats (all little-endian, no padding, no compression):

  SNSK  sketch          magic "SNSK", version u16=1, rows u32, cols u32,
                        seed u64, total_updates u64, rows*cols i64 counters
                        row-major (produced by CountSketch.serialize).
  SNHH  heavy hitters   magic "SNHH", version u16=1, count u64, then per
                        entry rank u32, key_hi u64, key_lo u64, freq i64.
  SNSD  point data      magic "SNSD", version u16=1, dims u32, count u64,
                        then count*dims f32 row-major.

Text formats:

  heavy-hitter CSV      header "rank,key,freq", key as decimal (128-bit).
  summary CSV           header "x0,...,x{D-1},rank,replica,freq".
  points CSV            one row per point, D numeric columns, optional
                        header line.

Writers stage everything under "<path>.partial" and rename on success, so
an interrupted run never leaves a final-looking file behind.
"""

from __future__ import annotations

import csv
import os
import struct
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadMagicError,
    DataQualityError,
    DomainError,
    FormatError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .heavy_hitters import HeavyHitter
from .sketch import CountSketch
from .summary import SummaryPoint

_SNHH_MAGIC = b"SNHH"
_SNHH_HEADER = struct.Struct("<4sHQ")
_SNHH_ENTRY = struct.Struct("<IQQq")
_SNSD_MAGIC = b"SNSD"
_SNSD_HEADER = struct.Struct("<4sHIQ")

_KEY_MASK = (1 << 64) - 1


# -- atomic output -------------------------------------------------------


@contextmanager
def atomic_output(path):
    """Yield a staging path ("<path>.partial"); rename over ``path`` on success."""
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    yield tmp
    os.replace(tmp, path)


def atomic_write_bytes(path, data: bytes) -> None:
    with atomic_output(path) as tmp:
        tmp.write_bytes(data)


# -- sketches -------------------------------------------------------------


def write_sketch(sketch: CountSketch, path) -> None:
    atomic_write_bytes(path, sketch.serialize())


def read_sketch(path) -> CountSketch:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read sketch file {path}: {exc}") from exc
    try:
        return CountSketch.deserialize(data)
    except FormatError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


# -- heavy hitters ---------------------------------------------------------


def write_hh_binary(entries: Sequence[HeavyHitter], path) -> None:
    parts = [_SNHH_HEADER.pack(_SNHH_MAGIC, 1, len(entries))]
    for hh in entries:
        parts.append(_SNHH_ENTRY.pack(hh.rank, hh.key >> 64, hh.key & _KEY_MASK, hh.freq))
    atomic_write_bytes(path, b"".join(parts))


def read_hh_binary(path) -> list[HeavyHitter]:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != _SNHH_MAGIC:
        raise BadMagicError(f"{path}: expected magic {_SNHH_MAGIC!r}")
    if len(data) < _SNHH_HEADER.size:
        raise TruncatedPayloadError(f"{path}: header truncated")
    _, version, count = _SNHH_HEADER.unpack_from(data, 0)
    if version != 1:
        raise VersionMismatchError(f"{path}: unsupported version {version}")
    expected = _SNHH_HEADER.size + count * _SNHH_ENTRY.size
    if len(data) < expected:
        raise TruncatedPayloadError(f"{path}: {len(data)} bytes, {expected} required")
    if len(data) > expected:
        raise FormatError(f"{path}: trailing bytes after {count} entries")
    out = []
    offset = _SNHH_HEADER.size
    for _ in range(count):
        rank, key_hi, key_lo, freq = _SNHH_ENTRY.unpack_from(data, offset)
        offset += _SNHH_ENTRY.size
        out.append(HeavyHitter(key=(key_hi << 64) | key_lo, freq=freq, rank=rank))
    return out


def write_hh_csv(entries: Sequence[HeavyHitter], path) -> None:
    with atomic_output(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rank", "key", "freq"])
            for hh in entries:
                writer.writerow([hh.rank, hh.key, hh.freq])


def read_hh_csv(path) -> list[HeavyHitter]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["rank", "key", "freq"]:
            raise FormatError(f"{path}: expected header rank,key,freq, got {header}")
        for lineno, row in enumerate(reader, start=2):
            try:
                rank, key, freq = int(row[0]), int(row[1]), int(row[2])
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}: bad heavy-hitter row at line {lineno}") from exc
            out.append(HeavyHitter(key=key, freq=freq, rank=rank))
    return out


# -- summary points ---------------------------------------------------------


def write_summary_csv(points: Sequence[SummaryPoint], path) -> None:
    if not points:
        raise DomainError("refusing to write an empty summary")
    dims = len(points[0].coords)
    with atomic_output(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{d}" for d in range(dims)] + ["rank", "replica", "freq"])
            for p in points:
                writer.writerow(
                    [repr(c) for c in p.coords]
                    + [p.source_rank, p.replica_index, p.weight_freq]
                )


def read_summary_csv(path) -> list[SummaryPoint]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-3:] != ["rank", "replica", "freq"]:
            raise FormatError(f"{path}: expected a summary header ending rank,replica,freq")
        dims = len(header) - 3
        for lineno, row in enumerate(reader, start=2):
            try:
                coords = tuple(float(v) for v in row[:dims])
                rank, replica, freq = int(row[dims]), int(row[dims + 1]), int(row[dims + 2])
            except (ValueError, IndexError) as exc:
                raise FormatError(f"{path}: bad summary row at line {lineno}") from exc
            out.append(
                SummaryPoint(
                    coords=coords, source_rank=rank, replica_index=replica, weight_freq=freq
                )
            )
    return out


# -- point data ---------------------------------------------------------------


def write_points_snsd(points: np.ndarray, path) -> None:
    pts = np.asarray(points, dtype=np.float32)
    if pts.ndim != 2:
        raise DomainError(f"points must be 2-D, got shape {pts.shape}")
    header = _SNSD_HEADER.pack(_SNSD_MAGIC, 1, pts.shape[1], pts.shape[0])
    atomic_write_bytes(path, header + pts.astype("<f4", copy=False).tobytes())


def _snsd_header(path) -> tuple[int, int]:
    with open(path, "rb") as fh:
        head = fh.read(_SNSD_HEADER.size)
    if len(head) < 4 or head[:4] != _SNSD_MAGIC:
        raise BadMagicError(f"{path}: expected magic {_SNSD_MAGIC!r}")
    if len(head) < _SNSD_HEADER.size:
        raise TruncatedPayloadError(f"{path}: header truncated")
    _, version, dims, count = _SNSD_HEADER.unpack(head)
    if version != 1:
        raise VersionMismatchError(f"{path}: unsupported version {version}")
    if dims < 1:
        raise FormatError(f"{path}: dims must be positive, got {dims}")
    expected = _SNSD_HEADER.size + count * dims * 4
    actual = os.path.getsize(path)
    if actual < expected:
        raise TruncatedPayloadError(f"{path}: {actual} bytes, {expected} required")
    if actual > expected:
        raise FormatError(f"{path}: trailing bytes after {count} rows")
    return dims, count


def snsd_row_count(path) -> int:
    return _snsd_header(path)[1]


def read_points_snsd(path, row_start: int = 0, row_stop: int | None = None) -> np.ndarray:
    dims, count = _snsd_header(path)
    row_stop = count if row_stop is None else min(row_stop, count)
    row_start = min(row_start, row_stop)
    n = row_stop - row_start
    with open(path, "rb") as fh:
        fh.seek(_SNSD_HEADER.size + row_start * dims * 4)
        raw = fh.read(n * dims * 4)
    if len(raw) != n * dims * 4:
        raise TruncatedPayloadError(f"{path}: short read for rows [{row_start}, {row_stop})")
    return (
        np.frombuffer(raw, dtype="<f4").reshape(n, dims).astype(np.float64)
        if n
        else np.empty((0, dims))
    )


def _csv_has_header(path) -> bool:
    with open(path, newline="") as fh:
        first = fh.readline()
    if not first.strip():
        return False
    try:
        float(first.split(",")[0])
        return False
    except ValueError:
        return True


def csv_row_count(path) -> int:
    skip = 1 if _csv_has_header(path) else 0
    rows = 0
    with open(path, newline="") as fh:
        for line in fh:
            if line.strip():
                rows += 1
    return rows - skip


def read_points_csv(
    path,
    row_start: int = 0,
    row_stop: int | None = None,
    dims: int | None = None,
    shard: int | None = None,
) -> np.ndarray:
    """Read data rows [row_start, row_stop) of a points CSV.

    Row numbers index data rows (a header line is detected and excluded).
    Parse failures and non-finite values carry the absolute data row and
    the shard id, so worker errors point at the offending input line.
    """
    skip = 1 if _csv_has_header(path) else 0
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for _ in range(skip):
            next(reader, None)
        row_index = 0
        for row in reader:
            if not row:
                continue
            if row_stop is not None and row_index >= row_stop:
                break
            if row_index >= row_start:
                try:
                    values = [float(v) for v in row]
                except ValueError as exc:
                    raise DataQualityError(
                        f"{path}: unparseable numeric cell", shard=shard, row=row_index
                    ) from exc
                if dims is not None and len(values) != dims:
                    raise DataQualityError(
                        f"{path}: expected {dims} columns, got {len(values)}",
                        shard=shard,
                        row=row_index,
                    )
                rows.append(values)
            row_index += 1
    if not rows:
        return np.empty((0, dims if dims is not None else 0))
    pts = np.asarray(rows, dtype=np.float64)
    bad = ~np.isfinite(pts)
    if bad.any():
        first_bad = int(np.argwhere(bad.any(axis=1))[0][0]) + row_start
        raise DataQualityError(
            f"{path}: non-finite coordinate", shard=shard, row=first_bad
        )
    return pts


def write_points_csv(points: np.ndarray, path, header: bool = False) -> None:
    pts = np.asarray(points, dtype=np.float64)
    with atomic_output(path) as tmp:
        with open(tmp, "w", newline="") as fh:
            writer = csv.writer(fh)
            if header:
                writer.writerow([f"x{d}" for d in range(pts.shape[1])])
            for row in pts:
                writer.writerow([repr(float(v)) for v in row])


def count_rows(path, input_format: str) -> int:
    if input_format == "snsd":
        return snsd_row_count(path)
    return csv_row_count(path)


def read_points(
    path,
    input_format: str,
    row_start: int = 0,
    row_stop: int | None = None,
    dims: int | None = None,
    shard: int | None = None,
) -> np.ndarray:
    if input_format == "snsd":
        pts = read_points_snsd(path, row_start, row_stop)
        if dims is not None and pts.shape[1] != dims:
            raise DataQualityError(
                f"{path}: file has {pts.shape[1]} dims, config expects {dims}", shard=shard
            )
        bad = ~np.isfinite(pts)
        if bad.any():
            first_bad = int(np.argwhere(bad.any(axis=1))[0][0]) + row_start
            raise DataQualityError(f"{path}: non-finite coordinate", shard=shard, row=first_bad)
        return pts
    return read_points_csv(path, row_start, row_stop, dims=dims, shard=shard)


def detect_format(path, declared: str = "auto") -> str:
    """Resolve "auto" to "snsd" or "csv" by sniffing the magic bytes."""
    if declared in ("csv", "snsd"):
        return declared
    if declared != "auto":
        raise DomainError(f"unknown input format {declared!r}")
    with open(path, "rb") as fh:
        head = fh.read(4)
    return "snsd" if head == _SNSD_MAGIC else "csv"
