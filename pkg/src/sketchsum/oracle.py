"""Ground truth and analysis companions for sketch validation.

Everything here is exact or analytic and deliberately independent of the
sketch internals: hash-map counting for desk-scale validation, rank-banded
relative-error reports, Bernoulli subsampling (to contrast thinning
against sketching), and a Poisson model for how often heavy cells land
next to each other on the grid.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .sketch import CountSketch

_KEY_MASK = (1 << 64) - 1


@dataclass
class ExactCounts:
    """Exact multiset counts of a key stream."""

    counts: dict[int, int]
    stream_length: int

    @property
    def distinct(self) -> int:
        return len(self.counts)

    def ranked(self) -> list[tuple[int, int]]:
        """Keys with counts, ordered by count descending then key ascending."""
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))


def exact_count(keys) -> ExactCounts:
    """Count every key exactly. Desk-scale only: the stream must fit in memory."""
    if isinstance(keys, np.ndarray):
        uniq, cnt = np.unique(keys, return_counts=True)
        counts = {int(k): int(c) for k, c in zip(uniq, cnt)}
        return ExactCounts(counts=counts, stream_length=int(keys.size))
    counter = Counter(int(k) for k in keys)
    return ExactCounts(counts=dict(counter), stream_length=sum(counter.values()))


@dataclass(frozen=True)
class BandError:
    """RMS relative error over one exact-rank interval [rank_lo, rank_hi)."""

    rank_lo: int
    rank_hi: int
    rms: float
    keys: int


@dataclass
class ErrorBandReport:
    bands: list[BandError]

    def rows(self) -> list[tuple[int, int, float, int]]:
        return [(b.rank_lo, b.rank_hi, b.rms, b.keys) for b in self.bands]

    def __str__(self) -> str:
        lines = [f"{'rank range':>16}  {'keys':>8}  {'rms rel err':>12}"]
        for b in self.bands:
            lines.append(f"[{b.rank_lo:>6}, {b.rank_hi:>6})  {b.keys:>8}  {b.rms:>12.6f}")
        return "\n".join(lines)


def error_bands(
    exact: ExactCounts,
    sketch: CountSketch,
    bands: Sequence[tuple[int, int]],
) -> ErrorBandReport:
    """RMS of |f - f_hat| / f per exact-rank band.

    Ranks are 1-indexed over the exact ordering (count descending, key
    ascending); bands are half-open [lo, hi), must be in range, ascending
    and contiguous (they partition the evaluated rank range).
    """
    ranked = exact.ranked()
    n = len(ranked)
    if not bands:
        raise DomainError("at least one rank band is required")
    prev_hi = None
    for lo, hi in bands:
        if not 1 <= lo < hi <= n + 1:
            raise DomainError(
                f"band [{lo}, {hi}) is empty or outside the exact ranking's range 1..{n}"
            )
        if prev_hi is not None and lo != prev_hi:
            raise DomainError("bands must be contiguous and ascending")
        prev_hi = hi
    keys = [k for k, _ in ranked]
    freqs = np.array([f for _, f in ranked], dtype=np.float64)
    if all(k < 1 << 64 for k in keys):
        ests = sketch.estimate_many(np.array(keys, dtype=np.uint64))
    else:
        lo_arr = np.array([k & _KEY_MASK for k in keys], dtype=np.uint64)
        hi_arr = np.array([k >> 64 for k in keys], dtype=np.uint64)
        ests = sketch.estimate_many(lo_arr, hi_arr)
    rel = np.abs(freqs - ests.astype(np.float64)) / freqs
    out = []
    for lo, hi in bands:
        seg = rel[lo - 1 : hi - 1]
        out.append(
            BandError(rank_lo=lo, rank_hi=hi, rms=float(np.sqrt(np.mean(seg * seg))), keys=len(seg))
        )
    return ErrorBandReport(bands=out)


def subsample(keys, rate: float, seed: int = 0):
    """Independent Bernoulli(rate) thinning of a key stream.

    Returns the same container kind it was given (numpy array or list).
    At low rates this is the thinning that flattens heavy cells into
    Poisson noise, which is what sketching avoids.
    """
    if not 0.0 < rate <= 1.0:
        raise DomainError(f"rate must be in (0, 1], got {rate}")
    rng = np.random.default_rng(seed)
    if isinstance(keys, np.ndarray):
        mask = rng.random(keys.size) < rate
        return keys[mask]
    keys = list(keys)
    mask = rng.random(len(keys)) < rate
    return [k for k, keep in zip(keys, mask) if keep]


@dataclass(frozen=True)
class CollisionEstimate:
    """Poisson model of heavy hitters colliding within contact neighborhoods.

    With ``hh_count`` hitters spread over ``cell_count`` cells, the
    density inside a 3^dims contact neighborhood (the cell plus all
    adjacent cells) is ``neighborhood_density``. A hitter "collides" when
    its neighborhood holds at least one other hitter, i.e. at least two
    in total, so the expected number of colliding hitters is
    ``hh_count * P(N >= 2)`` for N ~ Poisson(neighborhood_density).
    """

    hh_count: int
    dims: int
    bins_per_axis: int
    cell_count: int
    neighborhood_cells: int
    cell_density: float
    neighborhood_density: float
    collisions: float


def _poisson_at_least_two(rho: float) -> float:
    if rho > 700.0:
        return 1.0
    if rho < 1e-3:
        # series for 1 - exp(-rho)*(1+rho); avoids cancellation at tiny rho
        return rho * rho / 2.0 - rho**3 / 3.0 + rho**4 / 8.0 - rho**5 / 30.0
    return 1.0 - math.exp(-rho) * (1.0 + rho)


def collision_rate(hh_count: int, dims: int, bins_per_axis: int) -> CollisionEstimate:
    """Expected number of heavy hitters with another hitter adjacent on the grid.

    Densities are computed in log space so huge grids (bins^dims far past
    float range) stay finite.
    """
    if hh_count < 0:
        raise DomainError(f"hh_count must be non-negative, got {hh_count}")
    if dims < 1:
        raise DomainError(f"dims must be >= 1, got {dims}")
    if bins_per_axis < 2:
        raise DomainError(f"bins_per_axis must be >= 2, got {bins_per_axis}")
    cell_count = bins_per_axis**dims
    neighborhood = 3**dims
    if hh_count == 0:
        lam = rho = collisions = 0.0
    else:
        log_lam = math.log(hh_count) - dims * math.log(bins_per_axis)
        log_rho = log_lam + dims * math.log(3.0)
        try:
            lam = math.exp(log_lam)
        except OverflowError:
            lam = math.inf
        try:
            rho = math.exp(log_rho)
        except OverflowError:
            rho = math.inf
        collisions = hh_count * (1.0 if rho == math.inf else _poisson_at_least_two(rho))
    return CollisionEstimate(
        hh_count=hh_count,
        dims=dims,
        bins_per_axis=bins_per_axis,
        cell_count=cell_count,
        neighborhood_cells=neighborhood,
        cell_density=lam,
        neighborhood_density=rho,
        collisions=collisions,
    )
