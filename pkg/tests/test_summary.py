"""Replica weighting and jittered expansion."""

import math

import numpy as np
import pytest

from sketchsum import (
    BoundingBox,
    GridSpec,
    HeavyHitter,
    SummaryPoint,
    cell_center,
    decode,
    expand,
    expected_expansion_size,
    replica_count,
)
from sketchsum.errors import DomainError

# frozen before the build by scripts/replica_sum_bruteforce.py
LOG_RANK_SUM_20000 = 39_995


def hh(rank, freq=100, key=None):
    return HeavyHitter(key=rank - 1 if key is None else key, freq=freq, rank=rank)


# -- replica_count ---------------------------------------------------------------


def test_log_rank_worst_rank_gets_one():
    assert replica_count(hh(20_000), "log_rank", r_max=20_000, f_min=1) == 1


def test_log_rank_best_rank():
    assert replica_count(hh(1), "log_rank", r_max=20_000, f_min=1) == 15  # 1 + floor(log2 20000)


def test_log_freq_exact_power():
    h = hh(5, freq=180 * 2**3)
    assert replica_count(h, "log_freq", r_max=10, f_min=180) == 4


def test_single_always_one():
    assert replica_count(hh(3), "single", r_max=10, f_min=1) == 1


def test_replica_count_matches_integer_doubling_oracle():
    def oracle(r, r_max):
        k = 0
        while (1 << (k + 1)) * r <= r_max:
            k += 1
        return 1 + k

    for r_max in (1024, 1000, 20_000):
        for r in (1, 2, 3, 511, 512, 513, r_max // 2, r_max - 1, r_max):
            if 1 <= r <= r_max:
                got = replica_count(hh(r), "log_rank", r_max=r_max, f_min=1)
                assert got == oracle(r, r_max), (r, r_max)


def test_replica_count_domain_errors():
    with pytest.raises(DomainError):
        replica_count(hh(0), "log_rank", r_max=10, f_min=1)
    with pytest.raises(DomainError):
        replica_count(hh(11), "log_rank", r_max=10, f_min=1)
    with pytest.raises(DomainError):
        replica_count(hh(1, freq=5), "log_freq", r_max=10, f_min=0)
    with pytest.raises(DomainError):
        replica_count(hh(1, freq=5), "log_freq", r_max=10, f_min=6)
    with pytest.raises(DomainError):
        replica_count(hh(1), "heaviest_first", r_max=10, f_min=1)


def test_replica_counts_monotone():
    r_max = 500
    counts = [replica_count(hh(r), "log_rank", r_max, 1) for r in range(1, r_max + 1)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))  # non-increasing in rank
    freqs = [1, 2, 5, 9, 100, 10_000]
    by_freq = [replica_count(hh(1, freq=f), "log_freq", 10, 1) for f in freqs]
    assert by_freq == sorted(by_freq)  # non-decreasing in freq


# -- expand -----------------------------------------------------------------------


GRID = GridSpec(BoundingBox((0.0, 0.0), (1.0, 1.0)), 16)


def ranked_list(n, freq_hi=1000):
    step = max(1, (freq_hi - 1) // max(1, n - 1)) if n > 1 else 1
    return [
        HeavyHitter(key=i, freq=freq_hi - i * step, rank=i + 1) for i in range(n)
    ]


def test_expand_single_scheme_one_point_each():
    hh_list = ranked_list(10)
    points = expand(hh_list, GRID, "single", jitter_seed=4)
    assert len(points) == 10
    assert [p.source_rank for p in points] == list(range(1, 11))
    assert all(p.replica_index == 0 for p in points)


def test_expand_deterministic():
    hh_list = ranked_list(25)
    a = expand(hh_list, GRID, "log_rank", jitter_seed=99)
    b = expand(hh_list, GRID, "log_rank", jitter_seed=99)
    assert a == b
    c = expand(hh_list, GRID, "log_rank", jitter_seed=100)
    assert a != c


def test_expand_jitter_inside_quarter_cell():
    hh_list = ranked_list(40)
    w = GRID.widths()
    for p in expand(hh_list, GRID, "log_rank", jitter_seed=7):
        hh_src = hh_list[p.source_rank - 1]
        center = cell_center(decode(hh_src.key, GRID), GRID)
        offset = np.abs(np.asarray(p.coords) - center)
        assert (offset <= w / 8).all()
        # strictly inside the bounding box
        assert (np.asarray(p.coords) > GRID.box.lo).all()
        assert (np.asarray(p.coords) < GRID.box.hi).all()


def test_expand_cardinality_matches_analytic_sum():
    hh_list = ranked_list(37)
    points = expand(hh_list, GRID, "log_rank", jitter_seed=1)
    want = sum(
        replica_count(h, "log_rank", r_max=37, f_min=min(x.freq for x in hh_list))
        for h in hh_list
    )
    assert len(points) == want == expected_expansion_size(37)


def test_expand_replicas_distinct():
    hh_list = ranked_list(30)
    points = expand(hh_list, GRID, "log_rank", jitter_seed=3)
    coords = {(p.source_rank, p.coords) for p in points}
    assert len(coords) == len(points)


def test_expand_empty_list_rejected():
    with pytest.raises(DomainError):
        expand([], GRID, "single", 0)


def test_expand_key_out_of_radix():
    bad = [HeavyHitter(key=GRID.cell_count, freq=5, rank=1)]
    with pytest.raises(DomainError):
        expand(bad, GRID, "single", 0)


def test_expand_20000_log_rank_total():
    grid = GridSpec(BoundingBox((0.0,), (1.0,)), 32_768)
    hh_list = [HeavyHitter(key=i, freq=20_000 - i, rank=i + 1) for i in range(20_000)]
    points = expand(hh_list, grid, "log_rank", jitter_seed=0)
    assert len(points) == LOG_RANK_SUM_20000 == expected_expansion_size(20_000)
