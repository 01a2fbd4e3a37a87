"""Count sketch: a mergeable rows x cols table of signed 64-bit counters.

``update`` hashes a key into one bucket per row and adds a sign-flipped
delta; ``estimate`` reads back the median of the per-row signed counters.
Contributions from other keys carry random signs and cancel in
expectation, so estimates of frequent keys concentrate near their true
counts. Columns buy accuracy (cols ~ 1/eps^2 gives an eps * l2-norm error
floor), rows buy confidence; ``estimate_l2`` exposes the underlying
second-moment estimator directly.

Construction is linear: merging two sketches by element-wise addition is
bit-identical to sketching the concatenated stream. That exactness is
load-bearing for the distributed harness and is asserted by tests, so all
arithmetic here is integer and overflow-checked.

Overflow policy: the sketch tracks a conservative budget ``_mass`` that
bounds the magnitude any counter can have reached (sum of |delta| since
the tightest known state). Operations that would push the budget past
the int64 range raise CounterOverflowError instead of wrapping silently;
merge additionally detects actual per-counter overflow exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagicError,
    ConfigError,
    CounterOverflowError,
    DomainError,
    IncompatibleSketchError,
    TruncatedPayloadError,
    FormatError,
    VersionMismatchError,
)
from .hashing import bucket_and_sign, bucket_sign_arrays, key_hash, row_seed, sign_of

INT64_MAX = 2**63 - 1
KEY_BITS = 128
_KEY_LIMIT = 1 << KEY_BITS
_MASK64 = (1 << 64) - 1

# Below this budget the vectorized paths are safe: cumulative sums and the
# two-central-values addition in the median stay inside int64.
_VECTOR_SAFE_MASS = 2**62

_MAGIC = b"SNSK"
_VERSION = 1
_HEADER = struct.Struct("<4sHIIQQ")
HEADER_BYTES = _HEADER.size  # 30


@dataclass(frozen=True)
class SketchConfig:
    """Shape and seed of a sketch. Sketches merge iff all three match.

    With an even row count the median of the per-row estimates is the
    truncated mean of the two central values; prefer an odd ``rows`` when
    a true order statistic matters.
    """

    rows: int
    cols: int
    seed: int

    def __post_init__(self):
        if not isinstance(self.rows, int) or self.rows < 1:
            raise ConfigError(f"rows must be a positive integer, got {self.rows!r}")
        if not isinstance(self.cols, int) or self.cols < 1:
            raise ConfigError(f"cols must be a positive integer, got {self.cols!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


def _split_key(key: int) -> tuple[int, int]:
    if not isinstance(key, (int, np.integer)):
        raise DomainError(f"key must be an integer, got {type(key).__name__}")
    key = int(key)
    if not 0 <= key < _KEY_LIMIT:
        raise DomainError(f"key must be an unsigned 128-bit integer, got {key}")
    return key >> 64, key & _MASK64


def _median_int(values: list[int]) -> int:
    """Median of ints; even count takes the central-pair mean truncated toward zero."""
    values = sorted(values)
    n = len(values)
    mid = n // 2
    if n & 1:
        return values[mid]
    s = values[mid - 1] + values[mid]
    return s // 2 if s >= 0 else -((-s) // 2)


def _median_sorted_rows(est: np.ndarray) -> np.ndarray:
    """Column-wise median of an (R, n) int64 array sorted along axis 0."""
    r = est.shape[0]
    mid = r // 2
    if r & 1:
        return est[mid].copy()
    s = est[mid - 1] + est[mid]
    q = s // 2
    # numpy's floor division -> truncation toward zero for negative odd sums
    return q + ((s < 0) & ((s & 1) != 0))


class CountSketch:
    """A rows x cols signed-counter table with seeded per-row hashing."""

    __slots__ = ("config", "counters", "total_updates", "_mass", "_row_seeds")

    def __init__(self, config: SketchConfig):
        if not isinstance(config, SketchConfig):
            config = SketchConfig(*config)
        self.config = config
        self.counters = np.zeros((config.rows, config.cols), dtype=np.int64)
        self.total_updates = 0
        self._mass = 0  # upper bound on max |counter|
        self._row_seeds = [row_seed(config.seed, r) for r in range(config.rows)]

    # -- bookkeeping ----------------------------------------------------

    def _reserve(self, amount: int) -> int:
        new_mass = self._mass + amount
        if new_mass > INT64_MAX:
            raise CounterOverflowError(
                "signed 64-bit counter budget exceeded: "
                f"accumulated magnitude {self._mass} + {amount} > {INT64_MAX}"
            )
        return new_mass

    @property
    def nbytes(self) -> int:
        """Bytes of counter storage."""
        return self.counters.nbytes

    def copy(self) -> "CountSketch":
        dup = CountSketch(self.config)
        dup.counters[:] = self.counters
        dup.total_updates = self.total_updates
        dup._mass = self._mass
        return dup

    # -- updates ----------------------------------------------------------

    def update(self, key: int, delta: int = 1) -> None:
        """Add ``delta`` to the key's bucket in every row (sign-flipped per row)."""
        delta = int(delta)
        new_mass = self._reserve(abs(delta))
        hi, lo = _split_key(key)
        counters = self.counters
        for r, rs in enumerate(self._row_seeds):
            b, s = bucket_and_sign(rs, hi, lo, self.config.cols)
            counters[r, b] = int(counters[r, b]) + s * delta
        self.total_updates += 1
        self._mass = new_mass

    def update_many(
        self, key_lo: np.ndarray, key_hi: np.ndarray | None = None, delta: int = 1
    ) -> None:
        """Apply one ``update(key, delta)`` per key, vectorized.

        Exactly equivalent (bit-for-bit on the counters) to looping over
        ``update``; the per-row scatter is order-insensitive because
        integer addition commutes.
        """
        key_lo = np.ascontiguousarray(key_lo, dtype=np.uint64)
        n = int(key_lo.size)
        if n == 0:
            return
        if key_hi is not None:
            key_hi = np.ascontiguousarray(key_hi, dtype=np.uint64)
            if key_hi.shape != key_lo.shape:
                raise DomainError("key_hi and key_lo must have identical shapes")
            if not key_hi.any():
                key_hi = None
        delta = int(delta)
        step = abs(delta) * n
        new_mass = self._reserve(step)
        cols = self.config.cols
        for r, rs in enumerate(self._row_seeds):
            buckets, signs = bucket_sign_arrays(rs, key_lo, key_hi, cols)
            if step < 2**53:
                # float64 bucket sums are exact below 2^53
                w = (signs * delta).astype(np.float64)
                self.counters[r] += np.bincount(buckets, weights=w, minlength=cols).astype(
                    np.int64
                )
            else:
                np.add.at(self.counters[r], buckets, signs * delta)
        self.total_updates += n
        self._mass = new_mass

    def ingest_with_estimates(
        self, key_lo: np.ndarray, key_hi: np.ndarray | None = None
    ) -> np.ndarray:
        """Unit-update each key in order and return its post-update estimate.

        Identical to ``[update(k) or estimate(k) for k in keys]`` but
        vectorized: per row, occurrences are grouped by bucket and a
        segmented prefix sum reconstructs the counter value each
        occurrence observed.
        """
        key_lo = np.ascontiguousarray(key_lo, dtype=np.uint64)
        n = int(key_lo.size)
        if n == 0:
            return np.empty(0, dtype=np.int64)
        if key_hi is not None:
            key_hi = np.ascontiguousarray(key_hi, dtype=np.uint64)
            if not key_hi.any():
                key_hi = None
        new_mass = self._reserve(n)
        if new_mass >= _VECTOR_SAFE_MASS:
            return self._ingest_scalar(key_lo, key_hi)
        rows, cols = self.config.rows, self.config.cols
        est = np.empty((rows, n), dtype=np.int64)
        for r, rs in enumerate(self._row_seeds):
            buckets, signs = bucket_sign_arrays(rs, key_lo, key_hi, cols)
            order = np.argsort(buckets, kind="stable")
            sb = buckets[order]
            ss = signs[order]
            starts = np.empty(n, dtype=bool)
            starts[0] = True
            np.not_equal(sb[1:], sb[:-1], out=starts[1:])
            start_idx = np.flatnonzero(starts)
            seg = np.cumsum(starts) - 1
            cs = np.cumsum(ss)
            within = cs - (cs[start_idx] - ss[start_idx])[seg]
            post = self.counters[r, sb[start_idx]][seg] + within
            row_est = np.empty(n, dtype=np.int64)
            row_est[order] = ss * post
            est[r] = row_est
            ends = np.empty(n, dtype=bool)
            ends[:-1] = starts[1:]
            ends[-1] = True
            self.counters[r, sb[ends]] = post[ends]
        self.total_updates += n
        self._mass = new_mass
        est.sort(axis=0)
        return _median_sorted_rows(est)

    def _ingest_scalar(self, key_lo, key_hi) -> np.ndarray:
        out = np.empty(key_lo.size, dtype=np.int64)
        for i in range(key_lo.size):
            key = int(key_lo[i]) | (int(key_hi[i]) << 64 if key_hi is not None else 0)
            self.update(key)
            out[i] = self.estimate(key)
        return out

    # -- queries ----------------------------------------------------------

    def estimate(self, key: int) -> int:
        """Median over rows of the signed counter the key hashes to."""
        hi, lo = _split_key(key)
        counters = self.counters
        vals = []
        for r, rs in enumerate(self._row_seeds):
            h = key_hash(rs, hi, lo)
            b = h % self.config.cols
            vals.append(sign_of(h) * int(counters[r, b]))
        return _median_int(vals)

    def estimate_many(
        self, key_lo: np.ndarray, key_hi: np.ndarray | None = None
    ) -> np.ndarray:
        """Vectorized ``estimate`` for a batch of keys."""
        key_lo = np.ascontiguousarray(key_lo, dtype=np.uint64)
        n = int(key_lo.size)
        if n == 0:
            return np.empty(0, dtype=np.int64)
        if key_hi is not None:
            key_hi = np.ascontiguousarray(key_hi, dtype=np.uint64)
            if not key_hi.any():
                key_hi = None
        if self._mass >= _VECTOR_SAFE_MASS:
            hi = key_hi if key_hi is not None else np.zeros_like(key_lo)
            return np.array(
                [self.estimate(int(l) | (int(h) << 64)) for l, h in zip(key_lo, hi)],
                dtype=np.int64,
            )
        est = np.empty((self.config.rows, n), dtype=np.int64)
        for r, rs in enumerate(self._row_seeds):
            buckets, signs = bucket_sign_arrays(rs, key_lo, key_hi, self.config.cols)
            est[r] = signs * self.counters[r, buckets]
        est.sort(axis=0)
        return _median_sorted_rows(est)

    def estimate_l2(self) -> float:
        """Estimate the l2 norm of the underlying frequency vector.

        Each row's sum of squared counters is an unbiased estimator of the
        squared norm; the median over rows is returned under a square root.
        Accumulation is in float64.
        """
        f = self.counters.astype(np.float64)
        per_row = np.einsum("rc,rc->r", f, f)
        return float(np.sqrt(np.median(per_row)))

    # -- serialization ----------------------------------------------------

    def serialize(self) -> bytes:
        """Bit-exact little-endian encoding (SNSK v1).

        Layout: magic "SNSK", version u16, rows u32, cols u32, seed u64,
        total_updates u64, then rows*cols signed 64-bit counters row-major.
        """
        header = _HEADER.pack(
            _MAGIC,
            _VERSION,
            self.config.rows,
            self.config.cols,
            self.config.seed,
            self.total_updates,
        )
        return header + self.counters.astype("<i8", copy=False).tobytes()

    @classmethod
    def deserialize(cls, data: bytes) -> "CountSketch":
        if len(data) < 4:
            raise TruncatedPayloadError(f"payload of {len(data)} bytes is shorter than the magic")
        if data[:4] != _MAGIC:
            raise BadMagicError(f"expected magic {_MAGIC!r}, got {bytes(data[:4])!r}")
        if len(data) < HEADER_BYTES:
            raise TruncatedPayloadError(
                f"header needs {HEADER_BYTES} bytes, payload has {len(data)}"
            )
        _, version, rows, cols, seed, total_updates = _HEADER.unpack_from(data, 0)
        if version != _VERSION:
            raise VersionMismatchError(f"unsupported sketch format version {version}")
        expected = HEADER_BYTES + rows * cols * 8
        if len(data) < expected:
            raise TruncatedPayloadError(
                f"payload has {len(data)} bytes, {expected} required for a {rows}x{cols} sketch"
            )
        if len(data) > expected:
            raise FormatError(f"{len(data) - expected} trailing bytes after sketch payload")
        sketch = cls(SketchConfig(rows, cols, seed))
        counters = np.frombuffer(data, dtype="<i8", count=rows * cols, offset=HEADER_BYTES)
        sketch.counters = counters.reshape(rows, cols).astype(np.int64, copy=True)
        sketch.total_updates = total_updates
        sketch._mass = int(np.abs(sketch.counters).max()) if sketch.counters.size else 0
        return sketch


def merge(a: CountSketch, b: CountSketch) -> CountSketch:
    """Element-wise sum of two sketches with identical configs.

    The result is bit-identical to a single sketch fed both streams.
    Actual counter overflow is detected exactly and raised.
    """
    if a.config != b.config:
        raise IncompatibleSketchError(
            f"sketch configs differ: {a.config} vs {b.config}; "
            "rows, cols and seed must all match"
        )
    with np.errstate(over="ignore"):
        summed = a.counters + b.counters
    overflow = ((a.counters > 0) & (b.counters > 0) & (summed <= 0)) | (
        (a.counters < 0) & (b.counters < 0) & (summed >= 0)
    )
    if overflow.any():
        raise CounterOverflowError("counter overflow while merging sketches")
    total = a.total_updates + b.total_updates
    if total >= 2**64:
        raise CounterOverflowError("total_updates would exceed the 64-bit stream counter")
    out = CountSketch(a.config)
    out.counters = summed
    out.total_updates = total
    out._mass = int(np.abs(summed).max()) if summed.size else 0
    return out
