from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logo_te.errors import EmptySplit, GoldFiltered
from logo_te.evaluation import (FilterIndex, MetricsReport, build_filter_set, metrics_from_ranks, rank_queries,
                                rank_with_filter, render_table, write_rank_dump)
from logo_te.events import OUTLIER, AtomicEvent, ComplexEvent, Dataset, Query, Vocab


def brute_rank(scores, gold, filt):
    # independent oracle: enumerate every candidate with plain Python comparisons
    raw = 1 + sum(1 for i, v in enumerate(scores) if i != gold and v > scores[gold])
    filtered = 1 + sum(1 for i, v in enumerate(scores) if i != gold and i not in filt and v > scores[gold])
    return raw, filtered


def brute_metrics(ranks):
    n = len(ranks)
    return (sum(1.0 / r for r in ranks) / n, sum(r <= 1 for r in ranks) / n, sum(r <= 3 for r in ranks) / n,
            sum(r <= 10 for r in ranks) / n)


def test_rank_examples():
    s = [0.9, 0.5, 0.1]
    r = rank_with_filter(s, 0)
    assert (r.raw_rank, r.filtered_rank) == (1, 1)
    r = rank_with_filter(s, 2, {0})
    assert (r.raw_rank, r.filtered_rank) == (3, 2)
    r = rank_with_filter([0.3] * 7, 4)
    assert (r.raw_rank, r.filtered_rank) == (1, 1)


def test_rank_gold_filtered():
    with pytest.raises(GoldFiltered):
        rank_with_filter([0.1, 0.2], 1, {1})


def test_metrics_examples():
    m = metrics_from_ranks([1, 2, 4])
    assert m.mrr == pytest.approx(0.58333, abs=1e-5)
    assert m.mrr == float(Fraction(7, 12))
    assert (m.hit1, m.hit3, m.hit10) == (1 / 3, 2 / 3, 1.0)
    one = metrics_from_ranks([1])
    assert (one.mrr, one.hit1, one.hit3, one.hit10) == (1.0, 1.0, 1.0, 1.0)


def test_metrics_empty():
    with pytest.raises(EmptySplit):
        metrics_from_ranks([])


def test_oracle_100_random_vectors():
    rng = np.random.default_rng(0)
    ranks, results = [], []
    for _ in range(100):
        n = int(rng.integers(2, 40))
        scores = rng.integers(0, 6, size=n).astype(float) if rng.random() < 0.5 else rng.normal(size=n)
        gold = int(rng.integers(n))
        filt = {int(i) for i in rng.choice(n, size=int(rng.integers(0, n)), replace=False)} - {gold}
        res = rank_with_filter(scores, gold, filt)
        assert (res.raw_rank, res.filtered_rank) == brute_rank(list(scores), gold, filt)
        ranks.append(res.filtered_rank)
    rep = metrics_from_ranks(ranks)
    mrr, h1, h3, h10 = brute_metrics(ranks)
    assert rep.mrr == pytest.approx(mrr, abs=1e-15)
    assert (rep.hit1, rep.hit3, rep.hit10) == (h1, h3, h10)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=30), st.data())
def test_filtered_never_worse(scores, data):
    gold = data.draw(st.integers(0, len(scores) - 1))
    filt = data.draw(st.sets(st.integers(0, len(scores) - 1))) - {gold}
    r = rank_with_filter(scores, gold, filt)
    assert 1 <= r.filtered_rank <= r.raw_rank <= len(scores)
    assert rank_with_filter(scores, gold, set()).filtered_rank == r.raw_rank


@given(st.lists(st.integers(1, 50), min_size=1, max_size=40), st.randoms())
def test_metrics_permutation_invariant(ranks, rnd):
    shuffled = list(ranks)
    rnd.shuffle(shuffled)
    assert metrics_from_ranks(ranks) == metrics_from_ranks(shuffled)


@given(st.lists(st.integers(2, 50), min_size=1, max_size=20), st.data())
def test_mrr_strictly_monotone(ranks, data):
    i = data.draw(st.integers(0, len(ranks) - 1))
    better = list(ranks)
    better[i] -= 1
    assert metrics_from_ranks(better).mrr > metrics_from_ranks(ranks).mrr


@given(st.lists(st.integers(1, 30), min_size=1, max_size=40))
def test_report_invariants(ranks):
    m = metrics_from_ranks(ranks)
    assert m.hit1 <= m.hit3 <= m.hit10
    assert m.hit1 <= m.mrr <= 1.0


def one_ce_dataset(events_by_ce, outliers=()):
    ces = {c: ComplexEvent.from_events(c, [AtomicEvent(*e, c) for e in evs]) for c, evs in events_by_ce.items()}
    ids = sorted(ces)
    splits = {"train": frozenset(ids[:1]), "val": frozenset(ids[1:2]), "test": frozenset(ids[2:])}
    return Dataset(Vocab.anonymous(10, 3), ces, list(outliers), splits)


def test_filter_set_rules():
    ds = one_ce_dataset({0: [(1, 0, 2, 5), (1, 0, 3, 4)], 1: [(4, 1, 4, 7)], 2: [(1, 0, 6, 5)]},
                        outliers=[AtomicEvent(1, 0, 8, 5, OUTLIER)])
    # another CE and split at the same (s, r, t) is filtered; the outlier and the t-1 event are not
    assert build_filter_set(ds, Query(1, 0, 5, 2, 6)) == {2}
    assert build_filter_set(ds, Query(4, 1, 7, 1, 4)) == set()
    assert build_filter_set(ds, Query(1, 0, 4, 0, 3)) == set()


def test_rank_queries_and_dump(tmp_path):
    ds = one_ce_dataset({0: [(1, 0, 2, 5)], 1: [(4, 1, 4, 7)], 2: [(1, 0, 6, 5)]})
    index = FilterIndex.from_dataset(ds)
    q = Query(1, 0, 5, 2, 6)
    scores = np.zeros((1, 10))
    scores[0, 2] = 1.0
    (res,) = rank_queries([q], scores, index)
    assert (res.raw_rank, res.filtered_rank) == (2, 1)
    path = tmp_path / "ranks.tsv"
    write_rank_dump(str(path), [res])
    assert path.read_text() == "1\t0\t6\t5\t2\t2\t1\n"


def test_render_table():
    rep = MetricsReport(0.5, 0.25, 0.5, 1.0, 4)
    text = render_table([rep, rep], ["a", "b"], ["", "best"])
    lines = text.splitlines()
    assert lines[0].split() == ["model", "MRR", "HIT@1", "HIT@3", "HIT@10", "n"]
    assert lines[2].endswith("best") and len(lines) == 3
