"""Temporal event data model: quintuples, vocabularies, snapshots and history windows.

An atomic event is the quintuple ``(s, r, o, t, c)``. Events are grouped into
complex events (CEs), each a chronologically ordered list of per-day
snapshots. The global timeline merges every CE together with the outlier
events that belong to no CE.

On disk a dataset is a directory::

    entity2id.txt  relation2id.txt  [relation_hierarchy.txt]
    train.tsv  valid.tsv  test.tsv  outliers.tsv
    meta.json

Quintuple files hold ``s\\tr\\to\\tt\\tc`` lines with ``c = -1`` for outliers.
"""

import enum
import json
import os
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import AlreadyAugmented, MalformedLine, UnknownId

SPLITS = ("train", "val", "test")
SPLIT_FILES = {"train": "train.tsv", "val": "valid.tsv", "test": "test.tsv"}
OUTLIER_FILE = "outliers.tsv"
OUTLIER_CODE = -1


class Marker(enum.Enum):
    OUTLIER = "outlier"
    GLOBAL = "global"

    def __repr__(self):
        return self.name


OUTLIER = Marker.OUTLIER
GLOBAL = Marker.GLOBAL


class AtomicEvent(NamedTuple):
    s: int
    r: int
    o: int
    t: int
    ce: "int | Marker"

    @property
    def is_outlier(self):
        return self.ce is OUTLIER

    def to_line(self):
        c = OUTLIER_CODE if self.ce is OUTLIER else self.ce
        return f"{self.s}\t{self.r}\t{self.o}\t{self.t}\t{c}"


class Query(NamedTuple):
    s: int
    r: int
    t: int
    ce: int
    gold: int


class _BiMap:
    """Dense name <-> id map."""

    def __init__(self, names=()):
        self._names = list(names)
        self._ids = {n: i for i, n in enumerate(self._names)}
        if len(self._ids) != len(self._names):
            raise ValueError("duplicate names in vocabulary")

    def __len__(self):
        return len(self._names)

    def __contains__(self, name):
        return name in self._ids

    def id(self, name):
        return self._ids[name]

    def name(self, idx):
        return self._names[idx]

    def add(self, name):
        if name not in self._ids:
            self._ids[name] = len(self._names)
            self._names.append(name)
        return self._ids[name]

    @property
    def names(self):
        return list(self._names)


class Vocab:
    """Entity and relation vocabularies with optional relation hierarchy.

    ``parents`` maps a child relation id to its parent relation id (CAMEO-style
    three-level tree). Both maps are dense: ids run ``0..n-1``.
    """

    def __init__(self, entities=(), relations=(), parents=None):
        self.entities = _BiMap(entities)
        self.relations = _BiMap(relations)
        self.parents = dict(parents or {})

    @classmethod
    def anonymous(cls, n_entities, n_relations):
        return cls([str(i) for i in range(n_entities)], [str(i) for i in range(n_relations)])

    @property
    def n_entities(self):
        return len(self.entities)

    @property
    def n_relations(self):
        return len(self.relations)

    def children(self, relation_id):
        return sorted(c for c, p in self.parents.items() if p == relation_id)

    def level(self, relation_id):
        depth = 1
        while relation_id in self.parents:
            relation_id = self.parents[relation_id]
            depth += 1
            if depth > len(self.parents) + 1:
                raise ValueError(f"cycle in relation hierarchy through {relation_id}")
        return depth

    def validate(self):
        n = self.n_relations
        for child, parent in self.parents.items():
            if not (0 <= child < n and 0 <= parent < n):
                raise UnknownId(f"hierarchy link {child}->{parent} outside relation range {n}")
            if self.level(parent) >= self.level(child):
                raise ValueError(f"relation {child} points to non-ancestor level {parent}")

    def save(self, directory):
        _write_lines(os.path.join(directory, "entity2id.txt"),
                     (f"{n}\t{i}" for i, n in enumerate(self.entities.names)))
        _write_lines(os.path.join(directory, "relation2id.txt"),
                     (f"{n}\t{i}" for i, n in enumerate(self.relations.names)))
        if self.parents:
            _write_lines(os.path.join(directory, "relation_hierarchy.txt"),
                         (f"{c}\t{p}" for c, p in sorted(self.parents.items())))

    @classmethod
    def load(cls, directory):
        entities = _read_name_ids(os.path.join(directory, "entity2id.txt"))
        relations = _read_name_ids(os.path.join(directory, "relation2id.txt"))
        parents = {}
        path = os.path.join(directory, "relation_hierarchy.txt")
        if os.path.exists(path):
            for lineno, parts in _tsv_rows(path):
                if len(parts) != 2:
                    raise MalformedLine(path, lineno, f"expected 2 fields, got {len(parts)}")
                child, parent = _ints(path, lineno, parts)
                parents[child] = parent
        vocab = cls(entities, relations, parents)
        vocab.validate()
        return vocab


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def _tsv_rows(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if line:
                yield lineno, line.split("\t")


def _ints(path, lineno, parts):
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise MalformedLine(path, lineno, f"non-integer field in {parts!r}") from None


def _read_name_ids(path):
    pairs = []
    for lineno, parts in _tsv_rows(path):
        if len(parts) != 2:
            raise MalformedLine(path, lineno, f"expected 'name\\tid', got {len(parts)} fields")
        pairs.append((_ints(path, lineno, parts[1:])[0], parts[0]))
    pairs.sort()
    if [i for i, _ in pairs] != list(range(len(pairs))):
        raise MalformedLine(path, 0, "ids are not dense 0..n-1")
    return [n for _, n in pairs]


def load_quintuples(path, vocab=None, *, n_relations=None):
    """Read a quintuple TSV file into a list of :class:`AtomicEvent`.

    ``n_relations`` overrides the relation bound (e.g. ``2*|R|`` for files
    written after inverse augmentation).
    """
    events = []
    n_ent = vocab.n_entities if vocab is not None else None
    n_rel = n_relations if n_relations is not None else (vocab.n_relations if vocab is not None else None)
    for lineno, parts in _tsv_rows(path):
        if len(parts) != 5:
            raise MalformedLine(path, lineno, f"expected 5 fields, got {len(parts)}")
        s, r, o, t, c = _ints(path, lineno, parts)
        if n_ent is not None and not (0 <= s < n_ent and 0 <= o < n_ent):
            raise UnknownId(f"{path}:{lineno}: entity id out of range [0, {n_ent})")
        if n_rel is not None and not 0 <= r < n_rel:
            raise UnknownId(f"{path}:{lineno}: relation id {r} out of range [0, {n_rel})")
        if t < 0 or c < OUTLIER_CODE:
            raise MalformedLine(path, lineno, "negative time or ce id")
        events.append(AtomicEvent(s, r, o, t, OUTLIER if c == OUTLIER_CODE else c))
    return events


def save_quintuples(path, events):
    _write_lines(path, (e.to_line() for e in events))


def add_inverse_relations(events, n_relations):
    """Return ``events`` followed by one inverse ``(o, r+|R|, s, t, c)`` per event."""
    for e in events:
        if e.r >= n_relations:
            raise AlreadyAugmented(f"relation id {e.r} >= |R|={n_relations}; input already augmented?")
    return list(events) + [AtomicEvent(e.o, e.r + n_relations, e.s, e.t, e.ce) for e in events]


@dataclass(frozen=True)
class Snapshot:
    """All events of one CE (or of the global context) on one day."""

    ce: "int | Marker"
    time: int
    events: tuple

    def __len__(self):
        return len(self.events)

    @cached_property
    def arrays(self):
        """``(subjects, relations, objects)`` as int64 arrays."""
        if not self.events:
            z = np.zeros(0, dtype=np.int64)
            return z, z, z
        a = np.asarray([(e.s, e.r, e.o) for e in self.events], dtype=np.int64)
        return a[:, 0].copy(), a[:, 1].copy(), a[:, 2].copy()


@dataclass
class ComplexEvent:
    id: int
    snapshots: list
    doc_ids: list = field(default_factory=list)
    label: str = ""

    @classmethod
    def from_events(cls, ce_id, events, doc_ids=(), label=""):
        by_time = defaultdict(list)
        for e in events:
            by_time[e.t].append(e)
        snaps = [Snapshot(ce_id, t, tuple(by_time[t])) for t in sorted(by_time)]
        return cls(ce_id, snaps, list(doc_ids), label or str(ce_id))

    @property
    def events(self):
        return [e for snap in self.snapshots for e in snap.events]

    @property
    def n_events(self):
        return sum(len(s) for s in self.snapshots)

    @property
    def start(self):
        return self.snapshots[0].time

    @property
    def end(self):
        return self.snapshots[-1].time

    @property
    def span(self):
        """Days covered, counting both endpoints."""
        return self.end - self.start + 1 if self.snapshots else 0

    def times(self):
        return [s.time for s in self.snapshots]

    def validate(self):
        times = self.times()
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"CE {self.id}: snapshot times not strictly increasing")
        for snap in self.snapshots:
            if not snap.events:
                raise ValueError(f"CE {self.id}: empty snapshot at t={snap.time}")
            if any(e.t != snap.time or e.ce != self.id for e in snap.events):
                raise ValueError(f"CE {self.id}: snapshot at t={snap.time} holds foreign events")


@dataclass
class Dataset:
    vocab: Vocab
    ces: dict
    outliers: list
    splits: dict
    epoch: str = "1970-01-01"
    t_max: "int | None" = None
    extra_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t_max is None:
            times = [e.t for e in self.all_events()]
            self.t_max = max(times) if times else 0

    def split_events(self, split):
        return [e for cid in sorted(self.splits[split]) for e in self.ces[cid].events]

    def all_events(self):
        for cid in sorted(self.ces):
            yield from self.ces[cid].events
        yield from self.outliers

    def validate(self):
        seen = set()
        for name in SPLITS:
            ids = set(self.splits.get(name, ()))
            if ids & seen:
                raise ValueError(f"split {name} overlaps another split")
            seen |= ids
            missing = ids - set(self.ces)
            if missing:
                raise UnknownId(f"split {name} references unknown CEs {sorted(missing)[:5]}")
        n_ent, n_rel = self.vocab.n_entities, self.vocab.n_relations
        for e in self.all_events():
            if not (0 <= e.s < n_ent and 0 <= e.o < n_ent and 0 <= e.r < n_rel):
                raise UnknownId(f"event {e} outside vocabulary")
            if not 0 <= e.t <= self.t_max:
                raise ValueError(f"event {e} outside time range [0, {self.t_max}]")
        for e in self.outliers:
            if e.ce is not OUTLIER:
                raise ValueError(f"outlier list holds non-outlier event {e}")
        for ce in self.ces.values():
            ce.validate()

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        self.vocab.save(directory)
        for name in SPLITS:
            save_quintuples(os.path.join(directory, SPLIT_FILES[name]), self.split_events(name))
        save_quintuples(os.path.join(directory, OUTLIER_FILE), self.outliers)
        meta = {
            "epoch": self.epoch,
            "num_entities": self.vocab.n_entities,
            "num_relations": self.vocab.n_relations,
            "t_max": self.t_max,
            "splits": {name: sorted(self.splits[name]) for name in SPLITS},
            **self.extra_meta,
        }
        with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, directory):
        vocab = Vocab.load(directory)
        with open(os.path.join(directory, "meta.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        for key, n in (("num_entities", vocab.n_entities), ("num_relations", vocab.n_relations)):
            if meta.get(key, n) != n:
                raise ValueError(f"meta.json {key}={meta[key]} disagrees with vocabulary size {n}")
        ces_events = defaultdict(list)
        splits = {}
        for name in SPLITS:
            events = load_quintuples(os.path.join(directory, SPLIT_FILES[name]), vocab)
            ids = set()
            for e in events:
                if e.ce is OUTLIER:
                    raise ValueError(f"{SPLIT_FILES[name]} contains an outlier event")
                ces_events[e.ce].append(e)
                ids.add(e.ce)
            splits[name] = frozenset(ids)
        outliers = load_quintuples(os.path.join(directory, OUTLIER_FILE), vocab)
        ces = {cid: ComplexEvent.from_events(cid, evs) for cid, evs in sorted(ces_events.items())}
        known = {"epoch", "num_entities", "num_relations", "t_max", "splits"}
        ds = cls(vocab, ces, outliers, splits, epoch=meta.get("epoch", "1970-01-01"),
                 t_max=meta.get("t_max"), extra_meta={k: v for k, v in meta.items() if k not in known})
        ds.validate()
        return ds


@dataclass(frozen=True)
class Timelines:
    local: dict
    global_: list

    def ce(self, ce_id):
        return self.local[ce_id]


def snapshot_index(dataset):
    """Per-CE timelines and the global timeline (all CEs plus outliers per day)."""
    local = {cid: list(ce.snapshots) for cid, ce in sorted(dataset.ces.items())}
    by_time = defaultdict(list)
    for e in dataset.all_events():
        by_time[e.t].append(e)
    glob = [Snapshot(GLOBAL, t, tuple(by_time[t])) for t in sorted(by_time)]
    return Timelines(local, glob)


def _window(snapshots, query_time, T):
    if T < 1:
        raise ValueError("history length T must be >= 1")
    lo, hi = 0, len(snapshots)
    while lo < hi:
        mid = (lo + hi) // 2
        if snapshots[mid].time < query_time:
            lo = mid + 1
        else:
            hi = mid
    return snapshots[max(0, lo - T):lo]


def local_history(ce, query_time, T):
    """Last ``T`` nonempty snapshots of ``ce`` strictly before ``query_time``."""
    snaps = ce.snapshots if isinstance(ce, ComplexEvent) else ce
    return _window(snaps, query_time, T)


def global_history(global_timeline, query_time, T):
    return _window(global_timeline, query_time, T)


def split_queries(dataset, split, timelines=None):
    """Distinct object queries for every CE event of ``split`` that has some history."""
    timelines = timelines or snapshot_index(dataset)
    first = timelines.global_[0].time if timelines.global_ else None
    seen = set()
    out = []
    for e in dataset.split_events(split):
        if first is None or e.t <= first:
            continue
        q = Query(e.s, e.r, e.t, e.ce, e.o)
        if q not in seen:
            seen.add(q)
            out.append(q)
    return out
