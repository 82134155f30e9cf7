"""Three-level relation hierarchy by name."""

from collections import defaultdict

# Top-level CAMEO event types, in ontology order.
CAMEO_ROOTS = (
    "Make public statement", "Make an appeal or request", "Express intent to cooperate",
    "Consult or meet", "Engage in diplomatic cooperation", "Engage in material cooperation",
    "Provide aid", "Yield or concede", "Investigate", "Demand or order", "Verbally disapprove",
    "Reject", "Threaten", "Engage in political dissent", "Exhibit military or police power",
    "Reduce relations", "Coerce", "Use unconventional violence including terrorist",
    "Use conventional military force", "Use unconventional mass force",
)

NO_SPECIFIC = "No specific"


class RelationHierarchy:
    """Ordered roots plus child lists keyed by parent name."""

    def __init__(self, roots=CAMEO_ROOTS, children=None):
        self.roots = tuple(roots)
        self._children = defaultdict(list)
        self._parent = {}
        for parent, kids in (children or {}).items():
            for kid in kids:
                self.add(parent, kid)

    def add(self, parent, child):
        if child in self._parent or child in self.roots:
            raise ValueError(f"relation {child!r} already placed in the hierarchy")
        if parent not in self.roots and parent not in self._parent:
            raise KeyError(f"unknown parent relation {parent!r}")
        self._children[parent].append(child)
        self._parent[child] = parent

    def children(self, relation):
        return tuple(self._children.get(relation, ()))

    def parent(self, relation):
        return self._parent.get(relation)

    def level(self, relation):
        depth = 1
        while relation in self._parent:
            relation = self._parent[relation]
            depth += 1
        return depth

    def __contains__(self, relation):
        return relation in self.roots or relation in self._parent

    def all_relations(self):
        out = []
        stack = list(reversed(self.roots))
        while stack:
            r = stack.pop()
            out.append(r)
            stack.extend(reversed(self.children(r)))
        return out

    @classmethod
    def from_vocab(cls, vocab):
        """Build from a :class:`~logo_te.events.Vocab` with parent links."""
        names = vocab.relations.names
        roots = [n for i, n in enumerate(names) if i not in vocab.parents]
        h = cls(roots)
        pending = sorted(vocab.parents.items(), key=lambda kv: vocab.level(kv[0]))
        for child, parent in pending:
            h.add(names[parent], names[child])
        return h

    def to_vocab(self):
        from ..events import Vocab

        names = self.all_relations()
        ids = {n: i for i, n in enumerate(names)}
        return Vocab((), names, {ids[c]: ids[p] for c, p in self._parent.items()})
