"""Tracker semantics, streaming ingestion, and final ranking."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sketchsum import (
    CountSketch,
    SketchConfig,
    TopKTracker,
    exact_count,
    finalize,
    merge,
    stream_ingest,
    zipf_sample,
)
from sketchsum.errors import DomainError

CFG = SketchConfig(7, 512, 3)


# -- offer ----------------------------------------------------------------------


def test_offer_min_eviction():
    tr = TopKTracker(2)
    tr.offer(100, 5)
    tr.offer(200, 3)
    tr.offer(300, 4)
    assert sorted(tr.items()) == [(100, 5), (300, 4)]


def test_offer_upsert_raises_estimate():
    tr = TopKTracker(2)
    tr.offer(1, 5)
    tr.offer(1, 7)
    assert tr.estimate_of(1) == 7
    tr.offer(1, 6)  # lower re-offer never lowers the stored value
    assert tr.estimate_of(1) == 7


def test_offer_tie_does_not_evict():
    tr = TopKTracker(1)
    tr.offer(5, 10)
    tr.offer(6, 10)
    assert tr.keys() == [5]


def test_capacity_validated():
    with pytest.raises(DomainError):
        TopKTracker(0)


@given(
    offers=st.lists(
        st.tuples(st.integers(0, 30), st.integers(0, 100)), min_size=1, max_size=300
    ),
    capacity=st.integers(1, 8),
)
@settings(max_examples=200)
def test_tracker_invariants(offers, capacity):
    tr = TopKTracker(capacity)
    stored_history = {}
    for key, est in offers:
        before = dict(tr.items())
        tr.offer(key, est)
        after = dict(tr.items())
        assert len(tr) <= capacity
        assert len(set(after)) == len(after)  # no duplicate keys by construction
        # monotone stored estimates
        if key in before and key in after:
            assert after[key] >= before[key]
        # eviction only ever removes the current minimum, and only for more
        evicted = set(before) - set(after)
        if evicted:
            (gone,) = evicted
            assert before[gone] == min(before.values())
            assert est > before[gone]
            assert min(after.values()) >= before[gone]
        for k, e in after.items():
            stored_history.setdefault(k, []).append(e)
    for k, history in stored_history.items():
        assert history == sorted(history)


# -- stream_ingest ---------------------------------------------------------------


def test_ingest_single_key():
    sk = CountSketch(CFG)
    tr = TopKTracker(4)
    stream_ingest(sk, tr, [9] * 42)
    assert tr.items() == [(9, 42)]


def test_ingest_seventy_thirty_capacity_one():
    sk = CountSketch(CFG)
    tr = TopKTracker(1)
    stream = [1] * 70 + [2] * 30
    rng = np.random.default_rng(1)
    rng.shuffle(stream)
    stream_ingest(sk, tr, stream)
    assert tr.keys() == [1]


def test_vectorized_ingest_matches_scalar():
    rng = np.random.default_rng(6)
    keys = rng.integers(0, 25, size=2000, dtype=np.uint64)
    sk_v, tr_v = CountSketch(CFG), TopKTracker(10)
    stream_ingest(sk_v, tr_v, keys)
    sk_s, tr_s = CountSketch(CFG), TopKTracker(10)
    stream_ingest(sk_s, tr_s, [int(k) for k in keys])
    assert sk_v.serialize() == sk_s.serialize()
    assert sorted(tr_v.items()) == sorted(tr_s.items())


def test_ingest_128bit_key_pair_arrays():
    sk, tr = CountSketch(CFG), TopKTracker(4)
    lo = np.array([5, 5, 5], dtype=np.uint64)
    hi = np.array([1, 1, 1], dtype=np.uint64)
    stream_ingest(sk, tr, (lo, hi))
    key = (1 << 64) | 5
    assert tr.items() == [(key, 3)]
    assert sk.estimate(key) == 3


# -- finalize ---------------------------------------------------------------------


def test_finalize_tie_breaks_by_ascending_key():
    sk = CountSketch(CFG)
    for key in (11, 22, 33):
        for _ in range(10):
            sk.update(key)
    out = finalize([33, 11, 22], sk, 3)
    assert [hh.key for hh in out] == [11, 22, 33]
    assert [hh.rank for hh in out] == [1, 2, 3]
    assert all(hh.freq == 10 for hh in out)


def test_finalize_truncates_and_ranks():
    sk = CountSketch(CFG)
    counts = {1: 50, 2: 40, 3: 30, 4: 20, 5: 10}
    for key, c in counts.items():
        for _ in range(c):
            sk.update(key)
    out = finalize(counts, sk, 3)
    assert [(hh.key, hh.freq, hh.rank) for hh in out] == [(1, 50, 1), (2, 40, 2), (3, 30, 3)]


def test_finalize_k_larger_than_candidates_ranks_all():
    sk = CountSketch(CFG)
    sk.update(7)
    out = finalize([7], sk, 10)
    assert len(out) == 1 and out[0].rank == 1


def test_finalize_freq_nonincreasing_and_deterministic():
    rng = np.random.default_rng(10)
    keys = rng.integers(0, 200, size=5000, dtype=np.uint64)
    sk, tr = CountSketch(SketchConfig(7, 2048, 9)), TopKTracker(100)
    stream_ingest(sk, tr, keys)
    a = finalize(tr.keys(), sk, 50)
    b = finalize(reversed(tr.keys()), sk, 50)
    assert a == b
    freqs = [hh.freq for hh in a]
    assert freqs == sorted(freqs, reverse=True)
    assert [hh.rank for hh in a] == list(range(1, len(a) + 1))


def test_single_node_finalize_matches_tracker_order_when_exact():
    # collision-free config: tracker stored estimates equal exact counts,
    # so finalize ordering equals the tracker's own ordering
    sk, tr = CountSketch(SketchConfig(7, 4096, 2)), TopKTracker(64)
    rng = np.random.default_rng(3)
    counts = {k: int(rng.integers(1, 60)) for k in range(40)}
    stream = [k for k, c in counts.items() for _ in range(c)]
    rng.shuffle(stream)
    stream_ingest(sk, tr, stream)
    tracker_order = [k for k, _ in sorted(tr.items(), key=lambda kv: (-kv[1], kv[0]))]
    final_order = [hh.key for hh in finalize(tr.keys(), sk, len(tr))]
    assert final_order == tracker_order


# -- zipf recall ------------------------------------------------------------------


def test_zipf_candidate_recall_and_precision():
    # tracker budget 2K keeps nearly all of the exact top K
    n_keys, m, k = 10_000, 100_000, 200
    keys = zipf_sample(n_keys, m, 1.1, seed=12)
    sk, tr = CountSketch(SketchConfig(8, 4096, 21)), TopKTracker(2 * k)
    stream_ingest(sk, tr, keys)
    exact = exact_count(keys)
    exact_top = {key for key, _ in exact.ranked()[:k]}
    recall = len(exact_top & set(tr.keys())) / k
    assert recall >= 0.99, f"candidate recall {recall}"
    final_top = {hh.key for hh in finalize(tr.keys(), sk, k)}
    precision = len(final_top & exact_top) / k
    assert precision >= 0.95, f"precision@{k} = {precision}"


def test_sixteen_worker_union_precision_on_zipf():
    # spec-scale distributed run: 16 workers, candidate union re-estimated
    # on the tree-merged sketch, precision@1000 vs the exact oracle
    n_keys, m, k, budget = 100_000, 1_000_000, 1000, 2000
    keys = zipf_sample(n_keys, m, 1.1, seed=77)
    cfg = SketchConfig(16, 200_000, 5150)
    union: set[int] = set()
    sketches = []
    for part in np.array_split(keys, 16):
        sk, tr = CountSketch(cfg), TopKTracker(budget)
        stream_ingest(sk, tr, part)
        sketches.append(sk)
        union.update(tr.keys())
    while len(sketches) > 1:
        nxt = [merge(sketches[i], sketches[i + 1]) for i in range(0, len(sketches) - 1, 2)]
        if len(sketches) & 1:
            nxt.append(sketches[-1])
        sketches = nxt
    merged = sketches[0]
    exact_top = {key for key, _ in exact_count(keys).ranked()[:k]}
    final = {hh.key for hh in finalize(union, merged, k)}
    precision = len(final & exact_top) / k
    assert precision >= 0.95, f"16-worker precision@1000 = {precision}"


def test_distributed_union_matches_single_node_topk():
    # partition the stream over 4 workers; the candidate union re-estimated
    # on the merged sketch gives the same top-K as the single-node run
    n_keys, m, k = 5000, 40_000, 100
    keys = zipf_sample(n_keys, m, 1.1, seed=31)
    cfg = SketchConfig(8, 4096, 77)

    single_sk, single_tr = CountSketch(cfg), TopKTracker(2 * k)
    stream_ingest(single_sk, single_tr, keys)

    parts = np.array_split(keys, 4)
    sketches, unions = [], set()
    for part in parts:
        sk, tr = CountSketch(cfg), TopKTracker(2 * k)
        stream_ingest(sk, tr, part)
        sketches.append(sk)
        unions.update(tr.keys())
    merged = sketches[0]
    for sk in sketches[1:]:
        merged = merge(merged, sk)
    assert merged.serialize() == single_sk.serialize()

    top_single = [(hh.key, hh.freq) for hh in finalize(single_tr.keys(), merged, k)]
    top_union = [(hh.key, hh.freq) for hh in finalize(unions, merged, k)]
    assert top_single == top_union
