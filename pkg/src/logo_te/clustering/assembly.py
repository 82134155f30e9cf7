"""From clustered documents to a split SCTc-TE dataset."""

import logging
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyTrain
from ..events import OUTLIER, AtomicEvent, ComplexEvent, Dataset, Snapshot, Vocab
from .density import NOISE, cluster_documents
from .features import time_aware_features

log = logging.getLogger(__name__)

DAYS_PER_YEAR = 365


@dataclass
class ClusterConfig:
    lam: float = 1.0
    min_cluster_size: int = 10
    reduced_dim: int = 200
    seed: int = 0

    def validate(self, embedding_dim=None):
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if embedding_dim is not None and self.reduced_dim > embedding_dim:
            raise ValueError(f"reduced_dim {self.reduced_dim} exceeds embedding dim {embedding_dim}")
        return self


@dataclass
class SplitThresholds:
    h_a: int = 112
    h_t: int = 78

    def validate(self):
        if self.h_a < 10 or self.h_t < 2:
            raise ValueError("thresholds need h_a >= 10 and h_t >= 2")
        return self


def _with_ce(snapshot, ce_id):
    return Snapshot(ce_id, snapshot.time, tuple(e._replace(ce=ce_id) for e in snapshot.events))


def split_supercluster(ce, thresholds):
    """Greedy day-granular cut of an oversized CE.

    Snapshots are accumulated in time order. A piece is closed after the
    snapshot that brings its event count to ``h_a`` or its span (inclusive
    days) to ``h_t``; a snapshot that would push the span past ``h_t`` starts
    a new piece instead. The remainder forms the last piece. A CE that needs
    no cut is returned as is; pieces carry labels ``<label>.<k>``.
    """
    h_a, h_t = thresholds.h_a, thresholds.h_t
    pieces, current, count = [], [], 0
    for snap in ce.snapshots:
        if current and snap.time - current[0].time + 1 > h_t:
            pieces.append(current)
            current, count = [], 0
        current.append(snap)
        count += len(snap)
        if count >= h_a or snap.time - current[0].time + 1 >= h_t:
            pieces.append(current)
            current, count = [], 0
    if current:
        pieces.append(current)
    if len(pieces) <= 1:
        return [ce]
    label = ce.label or str(ce.id)
    return [ComplexEvent(ce.id, list(p), list(ce.doc_ids), f"{label}.{k}") for k, p in enumerate(pieces)]


@dataclass
class SplitResult:
    ces: dict
    splits: dict
    dropped: list
    pruned_events: list


def weighted_centroid(ce):
    """Mean day index over the CE's events."""
    return float(np.mean([e.t for e in ce.events]))


def filter_and_split(ces, min_days=2, min_events=10, val_years=1.0, test_years=1.0, t_max=None,
                     days_per_year=DAYS_PER_YEAR):
    """Drop tiny CEs, assign splits by event-time centroid, prune cold-start val/test events.

    ``ces`` maps id -> ComplexEvent (ids must be unique). The last
    ``test_years`` of ``[0, t_max]`` go to test, the ``val_years`` before
    that to val. Val/test events whose subject, object or relation never
    occurs in train are removed; CEs left empty are dropped.
    """
    if not ces:
        raise EmptyTrain("no complex events to split")
    kept, dropped = {}, []
    for cid, ce in ces.items():
        if ce.span < min_days or ce.n_events < min_events:
            dropped.append(ce)
        else:
            kept[cid] = ce
    if t_max is None:
        t_max = max(ce.end for ce in ces.values())
    test_start = t_max + 1 - test_years * days_per_year
    val_start = test_start - val_years * days_per_year
    splits = {"train": set(), "val": set(), "test": set()}
    for cid, ce in kept.items():
        c = weighted_centroid(ce)
        name = "test" if c >= test_start else ("val" if c >= val_start else "train")
        splits[name].add(cid)
    if not splits["train"]:
        raise EmptyTrain("no complex event falls in the training period")
    ents, rels = set(), set()
    for cid in splits["train"]:
        for e in kept[cid].events:
            ents.update((e.s, e.o))
            rels.add(e.r)
    pruned = []
    for name in ("val", "test"):
        for cid in sorted(splits[name]):
            ce = kept[cid]
            snaps = []
            for snap in ce.snapshots:
                ok = tuple(e for e in snap.events if e.s in ents and e.o in ents and e.r in rels)
                pruned.extend(e for e in snap.events if not (e.s in ents and e.o in ents and e.r in rels))
                if ok:
                    snaps.append(Snapshot(snap.ce, snap.time, ok))
            if snaps:
                kept[cid] = ComplexEvent(ce.id, snaps, ce.doc_ids, ce.label)
            else:
                del kept[cid]
                splits[name].discard(cid)
    return SplitResult(kept, {k: frozenset(v) for k, v in splits.items()}, dropped, pruned)


def assign_clusters(embeddings, days, config):
    feats = time_aware_features(embeddings, days, config.lam, config.reduced_dim)
    return cluster_documents(feats, config.min_cluster_size)


def build_dataset(doc_ids, days, labels, doc_events, thresholds=SplitThresholds(), *, min_days=2,
                  min_events=10, val_years=1.0, test_years=1.0, epoch="1970-01-01", vocab=None,
                  days_per_year=DAYS_PER_YEAR):
    """Assemble a :class:`Dataset` from clustered documents.

    ``doc_events`` holds ``(doc_id, subject, relation, object)`` name tuples;
    each event takes its document's day. Events of unclustered documents and
    of CEs dropped as too small become outlier events; cold-start pruned
    events are discarded.
    """
    day_of = {d: int(t) for d, t in zip(doc_ids, days)}
    label_of = {d: int(c) for d, c in zip(doc_ids, labels)}
    if vocab is None:
        ents = sorted({n for _, s, _, o in doc_events for n in (s, o)})
        rels = sorted({r for _, _, r, _ in doc_events})
        vocab = Vocab(ents, rels)
    by_cluster = defaultdict(list)
    docs_of = defaultdict(set)
    outliers = []
    for doc, s, r, o in doc_events:
        if doc not in day_of:
            raise KeyError(f"event references unknown document {doc!r}")
        c = label_of[doc]
        ev = (vocab.entities.id(s), vocab.relations.id(r), vocab.entities.id(o), day_of[doc])
        if c == NOISE:
            outliers.append(AtomicEvent(*ev, OUTLIER))
        else:
            by_cluster[c].append(AtomicEvent(*ev, c))
            docs_of[c].add(doc)
    pieces = []
    for c in sorted(by_cluster):
        ce = ComplexEvent.from_events(c, by_cluster[c], sorted(docs_of[c]), label=str(c))
        pieces.extend(split_supercluster(ce, thresholds))
    numbered = {}
    for new_id, ce in enumerate(pieces):
        numbered[new_id] = ComplexEvent(new_id, [_with_ce(s, new_id) for s in ce.snapshots], ce.doc_ids, ce.label)
    t_max = max(day_of.values()) if day_of else 0
    result = filter_and_split(numbered, min_days, min_events, val_years, test_years, t_max, days_per_year)
    for ce in result.dropped:
        outliers.extend(e._replace(ce=OUTLIER) for e in ce.events)
    outliers.sort(key=lambda e: (e.t, e.s, e.r, e.o))
    ids = sorted(result.ces)
    renum = {old: new for new, old in enumerate(ids)}
    ces = {renum[old]: ComplexEvent(renum[old], [_with_ce(s, renum[old]) for s in result.ces[old].snapshots],
                                    result.ces[old].doc_ids, result.ces[old].label) for old in ids}
    splits = {k: frozenset(renum[c] for c in v) for k, v in result.splits.items()}
    stats = {
        "n_clusters": len(by_cluster), "n_pieces": len(pieces), "n_dropped": len(result.dropped),
        "n_pruned_events": len(result.pruned_events), "n_outlier_events": len(outliers),
    }
    log.info("build: %s", stats)
    ds = Dataset(vocab, ces, outliers, splits, epoch=epoch, t_max=t_max,
                 extra_meta={"build": stats, "ce_labels": {str(k): v.label for k, v in ces.items()}})
    ds.validate()
    return ds
