"""Lenient parsers for model responses."""

import json
import logging
import re
from dataclasses import dataclass, field

from ..errors import MalformedJudgement
from .hierarchy import NO_SPECIFIC

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ParsedEvent:
    subject_text: str
    relation_label: str
    object_text: str
    level: int
    time: int = 0

    def __str__(self):
        return f"{self.subject_text}; {self.relation_label}; {self.object_text}"


@dataclass
class ParseResult:
    events: list = field(default_factory=list)
    warnings: int = 0

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)


def _norm(label):
    return " ".join(label.split()).casefold()


def parse_extraction(response, level, candidates, time=0):
    """Split ``a; rel; b | ...`` into events.

    A segment is dropped with one warning when it does not split into exactly
    three non-empty parts or its relation is neither a candidate nor
    ``No specific``. Relation matching ignores case and repeated whitespace;
    the canonical candidate spelling is kept.
    """
    allowed = {_norm(c): c for c in candidates}
    allowed.setdefault(_norm(NO_SPECIFIC), NO_SPECIFIC)
    result = ParseResult()
    for segment in (response or "").split("|"):
        segment = segment.strip()
        if not segment:
            continue
        parts = [p.strip() for p in segment.split(";")]
        if len(parts) != 3 or not all(parts):
            result.warnings += 1
            continue
        subj, rel, obj = parts
        label = allowed.get(_norm(rel))
        if label is None:
            result.warnings += 1
            continue
        result.events.append(ParsedEvent(subj, label, obj, level, time))
    if result.warnings:
        log.debug("dropped %d malformed segments", result.warnings)
    return result


_JSON_OBJECT = re.compile(r"\{.*\}", re.DOTALL)


def parse_link_response(response, names=None):
    """JSON ``{canonical: [aliases]}`` -> dict, or None when unparseable.

    Aliases outside ``names`` (when given) are ignored, as is any alias already
    claimed by an earlier canonical.
    """
    match = _JSON_OBJECT.search(response or "")
    if not match:
        return None
    try:
        data = json.loads(match.group(0))
    except json.JSONDecodeError:
        return None
    if not isinstance(data, dict):
        return None
    known = set(names) if names is not None else None
    claimed, out = set(), {}
    for canonical, aliases in data.items():
        if isinstance(aliases, str):
            aliases = [aliases]
        if not isinstance(canonical, str) or not isinstance(aliases, list):
            return None
        keep = []
        for a in aliases:
            if not isinstance(a, str) or a in claimed or (known is not None and a not in known):
                continue
            claimed.add(a)
            keep.append(a)
        if keep:
            out[canonical] = keep
    return out


_BOOL = {"true": True, "false": False}


def parse_judgement(response, n_events):
    """``[True, False, ...]`` (any case, optional quotes) -> list of bools of length ``n_events``."""
    match = re.search(r"\[(.*?)\]", response or "", re.DOTALL)
    if not match:
        raise MalformedJudgement("no bracketed list in judge response")
    tokens = [t.strip().strip("'\"").lower() for t in match.group(1).split(",") if t.strip()]
    if any(t not in _BOOL for t in tokens):
        raise MalformedJudgement(f"non-boolean entries in {match.group(0)!r}")
    if len(tokens) != n_events:
        raise MalformedJudgement(f"judge returned {len(tokens)} results for {n_events} events")
    return [_BOOL[t] for t in tokens]
