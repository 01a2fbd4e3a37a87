"""Grid quantization: raw D-dimensional points to 128-bit cell keys.

A bounding box plus a per-axis bin count define a regular grid; a point
maps to the mixed-radix encoding of its bin indices (axis 0 least
significant). Encoding is injective over the grid, so distinct cells are
distinct keys, and it inverts exactly.

Points that fall outside the box are clamped into the edge bins and
counted in a per-worker ClampStats rather than rejected: partitions of a
distributed run may see slightly different data ranges than the shared
box, and streams must stay total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataQualityError, DegenerateAxisError, DomainError

KEY_LIMIT = 1 << 128

# relative bound expansion so max-valued points land inside the last bin
BOUNDS_MARGIN = 1e-9


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with strictly positive extent on every axis."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or not lo:
            raise ConfigError("lo and hi must be non-empty vectors of equal length")
        for d, (a, b) in enumerate(zip(lo, hi)):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ConfigError(f"non-finite bound on axis {d}")
            if not a < b:
                raise ConfigError(f"axis {d}: lo ({a}) must be strictly below hi ({b})")

    @property
    def dims(self) -> int:
        return len(self.lo)


@dataclass(frozen=True)
class GridSpec:
    """A bounding box cut into ``bins_per_axis`` linear bins per axis."""

    box: BoundingBox
    bins_per_axis: int

    def __post_init__(self):
        m = self.bins_per_axis
        if not isinstance(m, int) or m < 2:
            raise ConfigError(f"bins_per_axis must be an integer >= 2, got {m!r}")
        if m ** self.box.dims > KEY_LIMIT:
            raise ConfigError(
                f"grid has {m}^{self.box.dims} cells, which does not fit a 128-bit key"
            )

    @property
    def dims(self) -> int:
        return self.box.dims

    @property
    def cell_count(self) -> int:
        """Total number of cells (exact integer)."""
        return self.bins_per_axis ** self.dims

    @property
    def fits_uint64(self) -> bool:
        return self.cell_count <= 1 << 64

    def lo_array(self) -> np.ndarray:
        return np.asarray(self.box.lo, dtype=np.float64)

    def widths(self) -> np.ndarray:
        lo = np.asarray(self.box.lo, dtype=np.float64)
        hi = np.asarray(self.box.hi, dtype=np.float64)
        return (hi - lo) / self.bins_per_axis


@dataclass
class ClampStats:
    """Count of points clamped into edge bins; merge per-worker stats by adding."""

    clamped: int = 0

    def merge(self, other: "ClampStats") -> None:
        self.clamped += other.clamped


def preprocess(point, threshold: float) -> np.ndarray | None:
    """Intensity-gate and normalize one point.

    Returns the unit-norm direction of ``point``, or None when its
    Euclidean norm is at or below ``threshold`` (background rejection).
    """
    if threshold < 0:
        raise DomainError(f"threshold must be non-negative, got {threshold}")
    x = np.asarray(point, dtype=np.float64)
    if not np.isfinite(x).all():
        raise DataQualityError("point has non-finite coordinates")
    norm = float(np.linalg.norm(x))
    if norm <= threshold:
        return None
    return x / norm


def threshold_normalize(
    points: np.ndarray, threshold: float | None, normalize: bool
) -> tuple[np.ndarray, int]:
    """Vectorized preprocessing for a batch: returns (kept points, dropped count).

    ``normalize`` implies at least a zero threshold so zero vectors are
    never divided by their own norm.
    """
    points = np.asarray(points, dtype=np.float64)
    if threshold is None and not normalize:
        return points, 0
    if threshold is not None and threshold < 0:
        raise DomainError(f"threshold must be non-negative, got {threshold}")
    gate = 0.0 if threshold is None else float(threshold)
    norms = np.linalg.norm(points, axis=1)
    keep = norms > gate
    dropped = int(points.shape[0] - np.count_nonzero(keep))
    kept = points[keep]
    if normalize:
        kept = kept / norms[keep][:, None]
    return kept, dropped


def fit_bounds(points) -> BoundingBox:
    """Fit a bounding box over points, expanded by a tiny relative margin.

    The margin (1e-9 of each axis span) keeps max-valued points strictly
    inside the final bin. Raises on empty input, non-finite coordinates,
    and zero-extent axes.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if pts.size else pts.reshape(0, 0)
    if pts.shape[0] == 0:
        raise DataQualityError("cannot fit bounds over an empty point stream")
    if not np.isfinite(pts).all():
        raise DataQualityError("point stream has non-finite coordinates")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    for d in range(pts.shape[1]):
        if lo[d] == hi[d]:
            raise DegenerateAxisError(d)
    span = hi - lo
    return BoundingBox(tuple(lo - BOUNDS_MARGIN * span), tuple(hi + BOUNDS_MARGIN * span))


class BoundsAccumulator:
    """Streaming min/max accumulator producing the same box as fit_bounds."""

    def __init__(self):
        self._lo = None
        self._hi = None
        self.count = 0

    def add(self, points: np.ndarray) -> None:
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape[0] == 0:
            return
        if not np.isfinite(pts).all():
            raise DataQualityError("point stream has non-finite coordinates")
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        if self._lo is None:
            self._lo, self._hi = lo, hi
        else:
            self._lo = np.minimum(self._lo, lo)
            self._hi = np.maximum(self._hi, hi)
        self.count += pts.shape[0]

    def result(self) -> BoundingBox:
        if self._lo is None:
            raise DataQualityError("cannot fit bounds over an empty point stream")
        for d in range(self._lo.size):
            if self._lo[d] == self._hi[d]:
                raise DegenerateAxisError(d)
        span = self._hi - self._lo
        return BoundingBox(
            tuple(self._lo - BOUNDS_MARGIN * span), tuple(self._hi + BOUNDS_MARGIN * span)
        )


def quantize(point, grid: GridSpec, stats: ClampStats | None = None) -> np.ndarray:
    """Bin indices of one point; out-of-box coordinates clamp into edge bins."""
    x = np.asarray(point, dtype=np.float64)
    if not np.isfinite(x).all():
        raise DataQualityError("point has non-finite coordinates")
    if x.shape != (grid.dims,):
        raise DomainError(f"point has {x.shape} coordinates, grid expects {grid.dims}")
    raw = np.floor((x - grid.lo_array()) / grid.widths()).astype(np.int64)
    m = grid.bins_per_axis
    out_of_box = (raw < 0) | (raw >= m)
    if stats is not None and out_of_box.any():
        stats.clamped += 1
    return np.clip(raw, 0, m - 1)


def quantize_many(
    points: np.ndarray, grid: GridSpec, stats: ClampStats | None = None
) -> np.ndarray:
    """Vectorized quantize over an (n, D) array."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != grid.dims:
        raise DomainError(f"points must be (n, {grid.dims}), got {pts.shape}")
    if not np.isfinite(pts).all():
        raise DataQualityError("point batch has non-finite coordinates")
    raw = np.floor((pts - grid.lo_array()) / grid.widths()).astype(np.int64)
    m = grid.bins_per_axis
    if stats is not None:
        clipped_rows = ((raw < 0) | (raw >= m)).any(axis=1)
        stats.clamped += int(np.count_nonzero(clipped_rows))
    return np.clip(raw, 0, m - 1)


def encode(indices, grid: GridSpec) -> int:
    """Mixed-radix key of a bin-index vector (axis 0 least significant)."""
    q = np.asarray(indices, dtype=np.int64)
    if q.shape != (grid.dims,):
        raise DomainError(f"index vector has shape {q.shape}, grid expects ({grid.dims},)")
    m = grid.bins_per_axis
    if ((q < 0) | (q >= m)).any():
        raise DomainError(f"bin index out of range [0, {m}): {q.tolist()}")
    value = 0
    for d in range(grid.dims - 1, -1, -1):
        value = value * m + int(q[d])
    return value


def decode(key: int, grid: GridSpec) -> np.ndarray:
    """Invert ``encode``; raises when the key is outside the grid's radix range."""
    key = int(key)
    if not 0 <= key < grid.cell_count:
        raise DomainError(f"key {key} outside radix range [0, {grid.cell_count})")
    m = grid.bins_per_axis
    out = np.empty(grid.dims, dtype=np.int64)
    for d in range(grid.dims):
        key, digit = divmod(key, m)
        out[d] = digit
    return out


def encode_many(indices: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray | None]:
    """Vectorized encode to (low, high) 64-bit key halves.

    Grids with at most 2^64 cells take a pure uint64 Horner pass; larger
    radixes fall back to exact Python integers.
    """
    q = np.asarray(indices, dtype=np.int64)
    if q.ndim != 2 or q.shape[1] != grid.dims:
        raise DomainError(f"indices must be (n, {grid.dims}), got {q.shape}")
    m = grid.bins_per_axis
    if ((q < 0) | (q >= m)).any():
        raise DomainError(f"bin index out of range [0, {m})")
    if grid.fits_uint64:
        um = np.uint64(m)
        value = np.zeros(q.shape[0], dtype=np.uint64)
        for d in range(grid.dims - 1, -1, -1):
            value = value * um + q[:, d].astype(np.uint64)
        return value, None
    mask = (1 << 64) - 1
    lo = np.empty(q.shape[0], dtype=np.uint64)
    hi = np.empty(q.shape[0], dtype=np.uint64)
    for i, row in enumerate(q):
        value = 0
        for d in range(grid.dims - 1, -1, -1):
            value = value * m + int(row[d])
        lo[i] = value & mask
        hi[i] = value >> 64
    return lo, hi


def cell_center(indices, grid: GridSpec) -> np.ndarray:
    """Geometric center of a cell given its bin indices."""
    q = np.asarray(indices, dtype=np.int64)
    if ((q < 0) | (q >= grid.bins_per_axis)).any():
        raise DomainError(f"bin index out of range [0, {grid.bins_per_axis})")
    return grid.lo_array() + (q + 0.5) * grid.widths()
