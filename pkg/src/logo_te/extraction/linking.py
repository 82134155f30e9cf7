"""Entity linking: surface-feature K-means batches, one merge prompt per batch."""

import logging
import zlib
from dataclasses import replace

import numpy as np

from .parsing import parse_link_response
from .prompts import build_linking_prompt

log = logging.getLogger(__name__)

HASH_DIM = 256
NGRAM_SIZES = (2, 3, 4)


def name_embedding(name, dim=HASH_DIM):
    """L2-normalised hashed character n-gram counts of ``name`` (lowercased, padded)."""
    text = f" {name.lower()} "
    v = np.zeros(dim)
    for n in NGRAM_SIZES:
        for i in range(max(len(text) - n + 1, 1)):
            v[zlib.crc32(text[i:i + n].encode("utf-8")) % dim] += 1.0
    norm = np.linalg.norm(v)
    return v / norm if norm else v


def name_embeddings(names, dim=HASH_DIM):
    return np.stack([name_embedding(n, dim) for n in names]) if names else np.zeros((0, dim))


def kmeans(X, K, seed=0, max_iter=50):
    """Lloyd iterations from K distinct random rows; empty clusters restart at the farthest point."""
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if not 1 <= K <= n:
        raise ValueError(f"K must be in [1, {n}], got {K}")
    rng = np.random.default_rng(seed)
    centers = X[np.sort(rng.choice(n, size=K, replace=False))].copy()
    labels = np.full(n, -1)
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        new = d2.argmin(1)
        for k in range(K):
            if not (new == k).any():
                far = int(d2[np.arange(n), new].argmax())
                new[far] = k
                d2[far] = 0.0
        if np.array_equal(new, labels):
            break
        labels = new
        for k in range(K):
            centers[k] = X[labels == k].mean(0)
    return labels


class LinkMap:
    """Canonical name -> alias list, alias lists disjoint.

    ``resolve`` follows alias chains to a fixpoint so maps from later rounds,
    which may rename earlier canonicals, compose cleanly.
    """

    def __init__(self, mapping=None):
        self._to = {}
        for canonical, aliases in (mapping or {}).items():
            for a in aliases:
                self.add(a, canonical)

    def add(self, alias, canonical):
        canonical = self.resolve(canonical)
        if alias == canonical:
            return
        root = self.resolve(alias)
        if root == canonical:
            return
        # Re-point the alias's current root so the whole group follows.
        self._to[root] = canonical

    def resolve(self, name):
        seen = set()
        while name in self._to:
            if name in seen:
                raise RuntimeError(f"cycle in link map at {name!r}")
            seen.add(name)
            name = self._to[name]
        return name

    def groups(self):
        out = {}
        for alias in self._to:
            out.setdefault(self.resolve(alias), []).append(alias)
        return {c: sorted(a) for c, a in sorted(out.items())}

    def __len__(self):
        return len(self._to)

    def __getitem__(self, name):
        return self.resolve(name)

    def apply(self, events):
        """Rewrite subject/object names of ParsedEvents; other fields untouched."""
        return [replace(e, subject_text=self.resolve(e.subject_text), object_text=self.resolve(e.object_text))
                for e in events]

    def apply_rows(self, rows):
        """Same for ``(doc_id, subject, relation, object)`` rows."""
        return [(d, self.resolve(s), r, self.resolve(o)) for d, s, r, o in rows]

    def to_json(self):
        return self.groups()


def link_entities(names, K, transport, rounds=2, seed=0, max_iter=50):
    """Merge duplicate entity names in K-means batches over ``rounds`` rounds.

    Round 1 clusters the raw names; later rounds cluster the canonical names
    left by the previous round. Returns ``(LinkMap, n_malformed_responses)``.
    """
    link = LinkMap()
    malformed = 0
    current = sorted(dict.fromkeys(names))
    for rnd in range(rounds):
        if len(current) < 2:
            break
        k = min(K, len(current))
        labels = kmeans(name_embeddings(current), k, seed=seed + rnd, max_iter=max_iter)
        for c in range(k):
            batch = [current[i] for i in np.flatnonzero(labels == c)]
            if len(batch) < 2:
                continue
            merged = parse_link_response(transport.send(build_linking_prompt(batch)), batch)
            if merged is None:
                malformed += 1
                continue
            for canonical, aliases in merged.items():
                for alias in aliases:
                    link.add(alias, canonical)
        current = sorted({link.resolve(n) for n in current})
    if malformed:
        log.info("%d linking responses could not be parsed", malformed)
    return link, malformed
