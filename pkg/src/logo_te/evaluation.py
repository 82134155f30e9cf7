"""Time-aware filtered ranking and MRR / HIT@{1,3,10}."""

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EmptySplit, GoldFiltered
from .events import Query

HITS_AT = (1, 3, 10)


@dataclass(frozen=True)
class RankResult:
    query: Query
    raw_rank: int
    filtered_rank: int

    def to_line(self):
        q = self.query
        return f"{q.s}\t{q.r}\t{q.gold}\t{q.t}\t{q.ce}\t{self.raw_rank}\t{self.filtered_rank}"


@dataclass(frozen=True)
class MetricsReport:
    mrr: float
    hit1: float
    hit3: float
    hit10: float
    n_queries: int

    def as_dict(self):
        return {"MRR": self.mrr, "HIT@1": self.hit1, "HIT@3": self.hit3, "HIT@10": self.hit10,
                "n_queries": self.n_queries}

    def render(self, title="model"):
        return render_table([self], [title])


def render_table(reports, names=None, marks=None):
    """Aligned text table of metric rows."""
    names = names or [""] * len(reports)
    marks = marks or [""] * len(reports)
    width = max([len(str(n)) for n in names] + [6])
    lines = [f"{'model':<{width}}  {'MRR':>7}  {'HIT@1':>7}  {'HIT@3':>7}  {'HIT@10':>7}  {'n':>6}"]
    for name, rep, mark in zip(names, reports, marks):
        lines.append(f"{str(name):<{width}}  {rep.mrr:7.4f}  {rep.hit1:7.4f}  {rep.hit3:7.4f}  "
                     f"{rep.hit10:7.4f}  {rep.n_queries:6d}{('  ' + mark) if mark else ''}")
    return "\n".join(lines)


def rank_with_filter(scores, gold, filter_ids=(), query=None):
    """Raw and filtered rank of ``gold``; ties count in gold's favour."""
    scores = np.asarray(scores, dtype=np.float64)
    filter_ids = set(int(i) for i in filter_ids)
    if gold in filter_ids:
        raise GoldFiltered(f"gold object {gold} is in the filter set")
    if not 0 <= gold < scores.shape[0]:
        raise IndexError(f"gold {gold} outside candidate range")
    better = scores > scores[gold]
    raw = 1 + int(better.sum())
    if filter_ids:
        idx = np.fromiter(filter_ids, dtype=np.int64, count=len(filter_ids))
        filtered = raw - int(better[idx].sum())
    else:
        filtered = raw
    return RankResult(query, raw, filtered)


class FilterIndex:
    """Objects known true for each ``(s, r, t)`` across every split."""

    def __init__(self, events):
        self._objects = defaultdict(set)
        for e in events:
            self._objects[(e.s, e.r, e.t)].add(e.o)

    @classmethod
    def from_dataset(cls, dataset):
        return cls(e for e in dataset.all_events() if not e.is_outlier)

    def filter_set(self, query):
        return self._objects.get((query.s, query.r, query.t), set()) - {query.gold}


def build_filter_set(dataset, query, index=None):
    index = index or FilterIndex.from_dataset(dataset)
    return index.filter_set(query)


def metrics_from_ranks(ranks):
    """Exact rational accumulation of reciprocal ranks, converted to floats once."""
    ranks = list(ranks)
    if not ranks:
        raise EmptySplit("no ranks to summarize")
    n = len(ranks)
    mrr = sum((Fraction(1, int(r)) for r in ranks), Fraction(0)) / n
    hits = [Fraction(sum(1 for r in ranks if r <= k), n) for k in HITS_AT]
    return MetricsReport(float(mrr), *(float(h) for h in hits), n_queries=n)


def rank_queries(queries, scores, index):
    results = []
    for q, row in zip(queries, scores):
        results.append(rank_with_filter(row, q.gold, index.filter_set(q), query=q))
    return results


def evaluate_split(model, dataset, split, *, timelines=None, index=None, queries=None):
    """Score every query of ``split`` and return ``(MetricsReport, [RankResult])``."""
    from .training import query_scores  # local import: training depends on this module
    from .events import snapshot_index, split_queries

    timelines = timelines or snapshot_index(dataset)
    queries = queries if queries is not None else split_queries(dataset, split, timelines)
    if not queries:
        raise EmptySplit(f"split {split!r} has no evaluable queries")
    index = index or FilterIndex.from_dataset(dataset)
    scores = query_scores(model, queries, timelines)
    results = rank_queries(queries, scores, index)
    return metrics_from_ranks(r.filtered_rank for r in results), results


def write_rank_dump(path, results):
    with open(path, "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(r.to_line() + "\n")
