"""Expansion of ranked heavy hitters into a weighted summary point cloud.

Embedding tools merge identical points, so each heavy cell is represented
by one or more jittered copies of its center. The replica count carries
the weight: either one point per cell (``single``), more points for
better ranks (``log_rank``), or more points for higher counts
(``log_freq``). Jitter spans a quarter of the cell width per axis
(uniform in +/- w/8 around the center), keeping every replica strictly
inside its cell.

The jitter generator is counter-based and keyed by
(jitter_seed, rank, replica, axis), so expansion is deterministic,
order-independent and safe to parallelize over heavy hitters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .hashing import mix64
from .heavy_hitters import HeavyHitter
from .quantizer import GridSpec, cell_center, decode

SCHEMES = ("single", "log_rank", "log_freq")

_JITTER_DOMAIN = 0x6A69747465722121  # derives the expansion's jitter stream


@dataclass(frozen=True)
class SummaryPoint:
    """One jittered replica of a heavy cell's center, with provenance."""

    coords: tuple[float, ...]
    source_rank: int
    replica_index: int
    weight_freq: int


def _floor_log2_ratio(numerator: int, denominator: int) -> int:
    # exact: floor(log2(a/b)) == floor(log2(a // b)) for positive ints a >= b
    return (numerator // denominator).bit_length() - 1


def replica_count(hh: HeavyHitter, scheme: str, r_max: int, f_min: int) -> int:
    """Number of replicas for one heavy hitter under a weighting scheme.

    ``r_max`` is the worst (largest) rank in the list and ``f_min`` the
    smallest count; both come from the list being expanded.
    """
    if scheme not in SCHEMES:
        raise DomainError(f"unknown weighting scheme {scheme!r}; expected one of {SCHEMES}")
    if not 1 <= hh.rank <= r_max:
        raise DomainError(f"rank {hh.rank} outside [1, {r_max}]")
    if scheme == "single":
        return 1
    if scheme == "log_rank":
        return 1 + _floor_log2_ratio(r_max, hh.rank)
    if f_min < 1:
        raise DomainError(f"log_freq needs f_min >= 1, got {f_min}")
    if hh.freq < f_min:
        raise DomainError(f"estimate {hh.freq} below f_min {f_min}")
    return 1 + _floor_log2_ratio(hh.freq, f_min)


def _jitter_unit(seed: int, rank: int, replica: int, axis: int) -> float:
    x = mix64(seed ^ _JITTER_DOMAIN)
    x = mix64(x ^ rank)
    x = mix64(x ^ replica)
    x = mix64(x ^ axis)
    return x / 2.0**64


def expand(
    hh_list: Sequence[HeavyHitter],
    grid: GridSpec,
    scheme: str = "log_rank",
    jitter_seed: int = 0,
) -> list[SummaryPoint]:
    """Expand a ranked heavy-hitter list into jittered summary points.

    Output size is exactly the sum of per-hitter replica counts. Each
    coordinate is the cell center plus an independent uniform draw from
    [-w/8, +w/8) for that axis.
    """
    if not hh_list:
        raise DomainError("cannot expand an empty heavy-hitter list")
    if scheme not in SCHEMES:
        raise DomainError(f"unknown weighting scheme {scheme!r}; expected one of {SCHEMES}")
    r_max = max(hh.rank for hh in hh_list)
    f_min = min(hh.freq for hh in hh_list)
    jitter_seed = int(jitter_seed) & ((1 << 64) - 1)
    quarter = grid.widths() / 4.0
    dims = grid.dims
    points: list[SummaryPoint] = []
    for hh in hh_list:
        center = cell_center(decode(hh.key, grid), grid)
        for replica in range(replica_count(hh, scheme, r_max, f_min)):
            coords = tuple(
                float(
                    center[d]
                    + (_jitter_unit(jitter_seed, hh.rank, replica, d) - 0.5) * quarter[d]
                )
                for d in range(dims)
            )
            points.append(
                SummaryPoint(
                    coords=coords,
                    source_rank=hh.rank,
                    replica_index=replica,
                    weight_freq=hh.freq,
                )
            )
    return points


def expected_expansion_size(k: int, scheme: str = "log_rank") -> int:
    """Analytic output size for a full list of ``k`` ranked hitters.

    Only rank-driven schemes have a closed form independent of the
    estimates; ``log_freq`` depends on the data.
    """
    if scheme == "single":
        return k
    if scheme != "log_rank":
        raise DomainError(f"no data-independent size for scheme {scheme!r}")
    return sum(1 + _floor_log2_ratio(k, r) for r in range(1, k + 1))
