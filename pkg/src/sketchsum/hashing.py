"""Deterministic seeded hashing for sketch rows.

Every hash here is a pure function of (seed, row, key). That is the
property that makes sketches mergeable across processes and machines:
two workers given the same seed agree bucket-for-bucket and sign-for-sign,
so adding their counter tables is exactly equivalent to one worker having
seen both streams.

Construction: each row derives a 64-bit row seed from the sketch seed via
a golden-ratio stride plus an avalanche mix. A 128-bit key (hi, lo) is
folded as ``h = mix64(lo ^ mix64(hi ^ row_seed))``; the bucket is
``h mod cols`` and the sign comes from bit 0 of ``mix64(h ^ salt)``.
The mixer is the standard 64-bit avalanche finalizer.

Scalar (pure Python int) and vectorized (numpy uint64) paths are kept in
lockstep; tests assert they agree bit-for-bit.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

_GOLDEN_STRIDE = 0x9E3779B97F4A7C15
_SIGN_SALT = 0xA5A5A5A5A5A5A5A5
_MIX_A = 0xFF51AFD7ED558CCD
_MIX_B = 0xC4CEB9FE1A85EC53


def mix64(x: int) -> int:
    """64-bit avalanche mix of a Python int (must be in [0, 2^64))."""
    x ^= x >> 33
    x = (x * _MIX_A) & MASK64
    x ^= x >> 33
    x = (x * _MIX_B) & MASK64
    x ^= x >> 33
    return x


def row_seed(seed: int, row: int) -> int:
    """Derive the per-row seed from the sketch seed."""
    return mix64((seed + row * _GOLDEN_STRIDE) & MASK64)


def key_hash(rseed: int, key_hi: int, key_lo: int) -> int:
    """Fold a 128-bit key into one 64-bit row hash."""
    return mix64(key_lo ^ mix64(key_hi ^ rseed))


def bucket_of(h: int, cols: int) -> int:
    return h % cols


def sign_of(h: int) -> int:
    """Map a row hash to +1 or -1 (bit 0 of a salted re-mix)."""
    return 1 if mix64(h ^ _SIGN_SALT) & 1 else -1


def bucket_and_sign(rseed: int, key_hi: int, key_lo: int, cols: int) -> tuple[int, int]:
    h = key_hash(rseed, key_hi, key_lo)
    return h % cols, sign_of(h)


# -- vectorized path ----------------------------------------------------

_U33 = np.uint64(33)
_UMIX_A = np.uint64(_MIX_A)
_UMIX_B = np.uint64(_MIX_B)
_USALT = np.uint64(_SIGN_SALT)
_U1 = np.uint64(1)


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized mix64 over a uint64 array. Does not mutate its input."""
    x = x ^ (x >> _U33)
    x = x * _UMIX_A
    x = x ^ (x >> _U33)
    x = x * _UMIX_B
    x = x ^ (x >> _U33)
    return x


def bucket_sign_arrays(
    rseed: int, key_lo: np.ndarray, key_hi: np.ndarray | None, cols: int
) -> tuple[np.ndarray, np.ndarray]:
    """Buckets (int64 in [0, cols)) and signs (int64 in {-1, +1}) per key.

    ``key_lo``/``key_hi`` are the low/high 64-bit halves of the keys;
    ``key_hi=None`` means all-zero high halves (keys below 2^64).
    """
    if key_hi is None:
        # hi == 0 for every key: the inner mix collapses to a constant
        h = mix64_array(key_lo ^ np.uint64(mix64(rseed)))
    else:
        h = mix64_array(key_lo ^ mix64_array(key_hi ^ np.uint64(rseed)))
    buckets = (h % np.uint64(cols)).astype(np.int64)
    signs = np.where((mix64_array(h ^ _USALT) & _U1).astype(bool), 1, -1).astype(np.int64)
    return buckets, signs
