"""Synthetic stream and dataset generators for benchmarks and tests.

The Zipf generator draws key ids 0..n_keys-1 with probability
proportional to 1/(id+1)**exponent via inverse-CDF lookup, so id order is
frequency order in expectation. Batches keep memory flat for streams far
larger than RAM.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .errors import DomainError


def zipf_probabilities(n_keys: int, exponent: float) -> np.ndarray:
    if n_keys < 1:
        raise DomainError(f"n_keys must be >= 1, got {n_keys}")
    if exponent <= 0:
        raise DomainError(f"exponent must be positive, got {exponent}")
    weights = 1.0 / np.arange(1, n_keys + 1, dtype=np.float64) ** exponent
    return weights / weights.sum()


def zipf_stream(
    n_keys: int,
    length: int,
    exponent: float = 1.1,
    seed: int = 0,
    batch_size: int = 1 << 20,
) -> Iterator[np.ndarray]:
    """Yield uint64 key batches totalling ``length`` draws."""
    cum = np.cumsum(zipf_probabilities(n_keys, exponent))
    cum[-1] = 1.0
    rng = np.random.default_rng(seed)
    remaining = int(length)
    while remaining > 0:
        n = min(batch_size, remaining)
        u = rng.random(n)
        idx = np.searchsorted(cum, u, side="right")
        yield np.minimum(idx, n_keys - 1).astype(np.uint64)
        remaining -= n


def zipf_sample(n_keys: int, length: int, exponent: float = 1.1, seed: int = 0) -> np.ndarray:
    """Materialize a whole Zipf stream (test-scale convenience)."""
    parts = list(zipf_stream(n_keys, length, exponent, seed))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.uint64)


def gaussian_clusters(
    counts,
    centers,
    spread: float = 0.05,
    seed: int = 0,
) -> np.ndarray:
    """Isotropic Gaussian blobs: one row per point, cluster order preserved."""
    centers = np.asarray(centers, dtype=np.float64)
    if centers.ndim != 2:
        raise DomainError("centers must be a (clusters, dims) array")
    counts = [int(c) for c in np.atleast_1d(counts)]
    if len(counts) == 1:
        counts = counts * centers.shape[0]
    if len(counts) != centers.shape[0]:
        raise DomainError("one count per cluster center required")
    rng = np.random.default_rng(seed)
    blobs = [
        center + spread * rng.standard_normal((n, centers.shape[1]))
        for center, n in zip(centers, counts)
    ]
    return np.concatenate(blobs, axis=0)
