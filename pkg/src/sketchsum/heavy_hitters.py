"""Top-K candidate tracking and final ranking.

A sketch alone cannot enumerate which keys were frequent, so each worker
keeps a bounded candidate set alongside its sketch: every ingested key is
offered with its current estimate, and the lowest-estimate entry is
evicted once the budget is full. After merging sketches, the union of all
workers' candidates is re-estimated against the merged sketch and ranked;
re-estimation on the merged table is strictly more informed than any
worker-local estimate.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .sketch import CountSketch

_KEY_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class HeavyHitter:
    """A ranked heavy hitter: rank 1 carries the largest estimate."""

    key: int
    freq: int
    rank: int


class TopKTracker:
    """Bounded candidate set with min-eviction on stored estimates.

    Stored estimates are monotone: re-offering a key can only raise its
    value. Eviction compares against the current minimum and is strict,
    so an incoming estimate equal to the minimum does not displace it.
    """

    __slots__ = ("capacity", "_est", "_heap")

    def __init__(self, capacity: int):
        if not isinstance(capacity, int) or capacity < 1:
            raise DomainError(f"capacity must be a positive integer, got {capacity!r}")
        self.capacity = capacity
        self._est: dict[int, int] = {}
        self._heap: list[tuple[int, int]] = []  # (estimate, key), lazily pruned

    def __len__(self) -> int:
        return len(self._est)

    def __contains__(self, key: int) -> bool:
        return key in self._est

    def estimate_of(self, key: int) -> int:
        return self._est[key]

    def keys(self) -> list[int]:
        return list(self._est)

    def items(self) -> list[tuple[int, int]]:
        return list(self._est.items())

    def _prune(self) -> None:
        heap = self._heap
        est = self._est
        while heap and est.get(heap[0][1]) != heap[0][0]:
            heapq.heappop(heap)

    def _push(self, key: int, estimate: int) -> None:
        self._est[key] = estimate
        heapq.heappush(self._heap, (estimate, key))
        if len(self._heap) > 4 * self.capacity:
            self._heap = [(e, k) for k, e in self._est.items()]
            heapq.heapify(self._heap)

    def offer(self, key: int, estimate: int) -> None:
        key = int(key)
        estimate = int(estimate)
        stored = self._est.get(key)
        if stored is not None:
            if estimate > stored:
                self._push(key, estimate)
            return
        if len(self._est) < self.capacity:
            self._push(key, estimate)
            return
        self._prune()
        min_est, min_key = self._heap[0]
        if estimate > min_est:
            heapq.heappop(self._heap)
            del self._est[min_key]
            self._push(key, estimate)


def stream_ingest(sketch: CountSketch, tracker: TopKTracker, keys) -> None:
    """Update the sketch with each key and offer its post-update estimate.

    ``keys`` may be any iterable of ints, a uint64 numpy array, or a
    ``(lo, hi)`` pair of uint64 arrays for 128-bit keys. The array forms
    run vectorized with semantics identical to the per-key loop.
    """
    if isinstance(keys, tuple) and len(keys) == 2 and isinstance(keys[0], np.ndarray):
        lo, hi = keys
        _ingest_arrays(sketch, tracker, lo, hi)
    elif isinstance(keys, np.ndarray):
        _ingest_arrays(sketch, tracker, keys, None)
    else:
        for key in keys:
            key = int(key)
            sketch.update(key)
            tracker.offer(key, sketch.estimate(key))


_INGEST_BATCH = 1 << 17


def _ingest_arrays(
    sketch: CountSketch, tracker: TopKTracker, lo: np.ndarray, hi: np.ndarray | None
) -> None:
    lo = np.ascontiguousarray(lo, dtype=np.uint64)
    hi = None if hi is None else np.ascontiguousarray(hi, dtype=np.uint64)
    for start in range(0, lo.size, _INGEST_BATCH):
        stop = min(start + _INGEST_BATCH, lo.size)
        blo = lo[start:stop]
        bhi = None if hi is None else hi[start:stop]
        ests = sketch.ingest_with_estimates(blo, bhi)
        offer = tracker.offer
        if bhi is None:
            for key, est in zip(blo.tolist(), ests.tolist()):
                offer(key, est)
        else:
            for klo, khi, est in zip(blo.tolist(), bhi.tolist(), ests.tolist()):
                offer(klo | (khi << 64), est)


def finalize(
    candidates: Iterable[int], sketch: CountSketch, k: int
) -> list[HeavyHitter]:
    """Re-estimate candidates on ``sketch`` and return the ranked top k.

    Sorting is by estimate descending, then key ascending, so output is
    deterministic; if fewer than ``k`` candidates exist, all are ranked.
    """
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    keys = sorted(set(int(c) for c in candidates))
    if not keys:
        return []
    if all(key < 1 << 64 for key in keys):
        ests = sketch.estimate_many(np.array(keys, dtype=np.uint64))
    else:
        lo = np.array([key & _KEY_MASK for key in keys], dtype=np.uint64)
        hi = np.array([key >> 64 for key in keys], dtype=np.uint64)
        ests = sketch.estimate_many(lo, hi)
    ranked = sorted(zip(keys, ests.tolist()), key=lambda kv: (-kv[1], kv[0]))[:k]
    return [HeavyHitter(key=key, freq=freq, rank=r) for r, (key, freq) in enumerate(ranked, 1)]
