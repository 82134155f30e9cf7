"""Synthetic corpora with known structure, for tests, demos and sanity runs."""

from dataclasses import dataclass

import numpy as np

from .events import OUTLIER, AtomicEvent, ComplexEvent, Dataset, Vocab
from .seeding import rng_for


def _assemble(n_entities, n_relations, ce_events, splits, outliers=()):
    ces = {cid: ComplexEvent.from_events(cid, evs) for cid, evs in sorted(ce_events.items()) if evs}
    splits = {k: frozenset(c for c in v if c in ces) for k, v in splits.items()}
    ds = Dataset(Vocab.anonymous(n_entities, n_relations), ces, list(outliers), splits)
    ds.validate()
    return ds


def modular_dataset(n_entities=12, n_relations=3, n_ces=3, n_times=20, events_per_step=None, seed=0):
    """Every CE follows ``o = (s + r) mod |E|`` at every timestamp.

    By default each CE emits every ``(s, r)`` pair daily, so all CEs share one
    history and the mapping is purely memorizable. With ``events_per_step``
    set, each CE instead walks the pairs in its own shuffled cyclic order,
    that many per day. CEs ``0..n_ces-3`` are train, the last two are val and
    test.
    """
    if n_ces < 3:
        raise ValueError("need at least 3 CEs (train, val, test)")
    rng = rng_for(seed, "synthetic/modular")
    pairs = [(s, r) for s in range(n_entities) for r in range(n_relations)]
    per_step = len(pairs) if events_per_step is None else events_per_step
    ce_events = {}
    for c in range(n_ces):
        order = np.arange(len(pairs)) if events_per_step is None else rng.permutation(len(pairs))
        evs = []
        for t in range(n_times):
            for j in range(per_step):
                s, r = pairs[order[(t * per_step + j) % len(pairs)]]
                evs.append(AtomicEvent(s, r, (s + r) % n_entities, t, c))
        ce_events[c] = evs
    splits = {"train": set(range(n_ces - 2)), "val": {n_ces - 2}, "test": {n_ces - 1}}
    return _assemble(n_entities, n_relations, ce_events, splits)


@dataclass(frozen=True)
class ContradictionLayout:
    n_entities: int = 24
    n_background: int = 6
    n_train: int = 14
    n_val: int = 4
    n_test: int = 4
    n_times: int = 36
    ce_length: int = 12
    majority_object: int = 2
    first_pool_object: int = 3
    pool_size: int = 12
    n_outliers_per_day: int = 2


def contradiction_dataset(layout=ContradictionLayout(), seed=0):
    """CEs whose own ``(s, r) -> o`` answers contradict the global majority.

    Subjects ``{0, 1}`` and relations ``{0, 1}`` are shared by every CE.
    Background CEs (train only, active on every day) always answer
    ``majority_object``. Each remaining CE answers its own pool object and is
    active for ``ce_length`` consecutive days, so its answer appears in its
    local history but is drowned out globally.
    """
    lay = layout
    rng = rng_for(seed, "synthetic/contradiction")
    n_rel = 2
    pairs = [(s, r) for s in (0, 1) for r in range(n_rel)]
    ce_events, splits = {}, {"train": set(), "val": set(), "test": set()}
    cid = 0
    for _ in range(lay.n_background):
        evs = []
        for t in range(lay.n_times):
            for s, r in pairs:
                if rng.random() < 0.75:
                    evs.append(AtomicEvent(s, r, lay.majority_object, t, cid))
        ce_events[cid] = evs
        splits["train"].add(cid)
        cid += 1
    n_contra = lay.n_train + lay.n_val + lay.n_test
    for k in range(n_contra):
        obj = lay.first_pool_object + k % lay.pool_size
        start = int(rng.integers(0, lay.n_times - lay.ce_length + 1))
        evs = []
        for t in range(start, start + lay.ce_length):
            chosen = [p for p in pairs if rng.random() < 0.6] or [pairs[int(rng.integers(len(pairs)))]]
            evs.extend(AtomicEvent(s, r, obj, t, cid) for s, r in chosen)
        ce_events[cid] = evs
        split = "train" if k < lay.n_train else ("val" if k < lay.n_train + lay.n_val else "test")
        splits[split].add(cid)
        cid += 1
    outliers = []
    noise_lo = lay.first_pool_object + lay.pool_size
    for t in range(lay.n_times):
        for _ in range(lay.n_outliers_per_day):
            s = int(rng.integers(noise_lo, lay.n_entities))
            o = int(rng.integers(noise_lo, lay.n_entities))
            outliers.append(AtomicEvent(s, int(rng.integers(n_rel)), o, t, OUTLIER))
    return _assemble(lay.n_entities, n_rel, ce_events, splits, outliers)


@dataclass
class SyntheticCorpus:
    """Documents with embeddings, publish days and extracted events."""

    doc_ids: list
    days: np.ndarray
    embeddings: np.ndarray
    doc_events: list  # (doc_id, subject, relation, object) name tuples
    topic: np.ndarray  # generative topic per document, -1 for noise


RELATION_NAMES = (
    "Make public statement", "Make an appeal or request", "Express intent to cooperate",
    "Consult or meet", "Engage in diplomatic cooperation", "Engage in material cooperation",
    "Provide aid", "Yield or concede",
)


def synthetic_corpus(n_topics=6, docs_per_topic=30, dim=16, n_days=400, topic_days=20,
                     n_noise_docs=20, n_actors=6, events_per_doc=3, seed=0):
    """Topic blobs in embedding space, each confined to a short run of days.

    Topics start at evenly spaced days and share one actor pool; each topic
    has its own fixed (actor -> partner, relation) pattern, so the extracted
    events form learnable complex events and later topics are not cold-start.
    """
    rng = rng_for(seed, "synthetic/corpus")
    centers = rng.normal(scale=6.0, size=(n_topics, dim))
    names = [f"country_{j}" for j in range(n_actors)]
    doc_ids, days, emb, events, topic = [], [], [], [], []
    last_start = max(0, n_days - topic_days)
    for k in range(n_topics):
        start = (k * last_start) // max(1, n_topics - 1)
        for i in range(docs_per_topic):
            doc = f"d{k:02d}_{i:03d}"
            doc_ids.append(doc)
            days.append(start + int(rng.integers(0, topic_days)))
            emb.append(centers[k] + rng.normal(scale=0.3, size=dim))
            topic.append(k)
            for _ in range(events_per_doc):
                a = int(rng.integers(n_actors))
                b = (a + 1 + k) % n_actors
                if b == a:
                    b = (a + 1) % n_actors
                rel = RELATION_NAMES[(a + k) % len(RELATION_NAMES)]
                events.append((doc, names[a], rel, names[b]))
    for i in range(n_noise_docs):
        doc = f"n{i:03d}"
        doc_ids.append(doc)
        days.append(int(rng.integers(0, n_days)))
        emb.append(rng.normal(scale=15.0, size=dim))
        topic.append(-1)
        events.append((doc, "country_0", RELATION_NAMES[int(rng.integers(len(RELATION_NAMES)))], "country_1"))
    return SyntheticCorpus(doc_ids, np.asarray(days, dtype=np.int64), np.asarray(emb), events,
                           np.asarray(topic, dtype=np.int64))


def blob_centers(n, dim, distance):
    """``n`` centers on the first axes, pairwise ``distance * sqrt(2)`` apart (``distance`` for n=2)."""
    c = np.zeros((n, dim))
    if n == 2:
        c[1, 0] = distance
    else:
        for i in range(n):
            c[i, i % dim] = distance
    return c


def gaussian_blobs(sizes=(50, 50), dim=8, sigma=0.1, distance=10.0, seed=0):
    """Isotropic blobs; returns ``(X, labels)``."""
    rng = rng_for(seed, "synthetic/blobs")
    centers = blob_centers(len(sizes), dim, distance)
    X = np.vstack([centers[k] + rng.normal(scale=sigma, size=(n, dim)) for k, n in enumerate(sizes)])
    return X, np.repeat(np.arange(len(sizes)), sizes)


def phased_blobs(n_per=25, dim=8, sigma=0.1, distance=10.0, phase_gap=500, phase_days=4, seed=0):
    """Two semantic blobs, each seen in two time phases ``phase_gap`` days apart.

    Returns ``(embeddings, days, labels)`` with label ``2*blob + phase``.
    """
    rng = rng_for(seed, "synthetic/phased")
    centers = blob_centers(2, dim, distance)
    emb, days, labels = [], [], []
    for b in range(2):
        for p in range(2):
            emb.append(centers[b] + rng.normal(scale=sigma, size=(n_per, dim)))
            days.append(p * phase_gap + rng.integers(0, phase_days, size=n_per))
            labels += [2 * b + p] * n_per
    return np.vstack(emb), np.concatenate(days).astype(np.int64), np.asarray(labels)
