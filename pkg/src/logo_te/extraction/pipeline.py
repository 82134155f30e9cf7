"""Hierarchical extraction over a transport, plus judge-based precision."""

import datetime as dt
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

from ..errors import EmptyBatch, TransportFailure
from .hierarchy import NO_SPECIFIC
from .parsing import parse_extraction, parse_judgement
from .prompts import Article, build_extraction_prompt, build_judge_prompt, candidate_relations

log = logging.getLogger(__name__)


@dataclass
class ExtractionReport:
    doc_id: str
    events: list = field(default_factory=list)
    calls: int = 0
    warnings: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


def _refine(event, article, hierarchy, transport, report):
    """One sub-level call for ``event``; returns the refined event or ``event`` itself."""
    level = event.level + 1
    focus = str(event)
    prompt = build_extraction_prompt(article, level, hierarchy, event.relation_label, focus=focus)
    report.calls += 1
    try:
        response = transport.send(prompt)
    except TransportFailure as exc:
        report.failures.append(f"level {level} for '{focus}': {exc}")
        return event, False
    parsed = parse_extraction(response, level, candidate_relations(hierarchy, level, event.relation_label))
    report.warnings += parsed.warnings
    if not parsed.events:
        return event, False
    # Only the relation is refined; actors stay as found at level 1.
    choice = parsed.events[0].relation_label
    if choice == NO_SPECIFIC:
        return event, False
    return replace(event, relation_label=choice, level=level), True


def extract_hierarchical(article, hierarchy, transport):
    """Extract events from one article, refining each down the relation hierarchy.

    Level 1 is one call. Every valid event whose relation has children gets
    one refinement call per deeper level; ``No specific`` or an unusable
    answer stops refinement and keeps the coarser relation.
    """
    report = ExtractionReport(article.doc_id)
    prompt = build_extraction_prompt(article, 1, hierarchy)
    report.calls += 1
    try:
        response = transport.send(prompt)
    except TransportFailure as exc:
        report.failures.append(f"level 1: {exc}")
        return report
    parsed = parse_extraction(response, 1, hierarchy.roots, time=article.day)
    report.warnings += parsed.warnings
    for event in parsed.events:
        if event.relation_label == NO_SPECIFIC:
            report.warnings += 1
            continue
        while event.level < 3 and hierarchy.children(event.relation_label):
            event, refined = _refine(event, article, hierarchy, transport, report)
            if not refined:
                break
        report.events.append(event)
    return report


def extract_many(articles, hierarchy, transport, workers=None):
    """Run :func:`extract_hierarchical` over articles, in input order."""
    limit = getattr(transport, "max_in_flight", 4)
    workers = min(workers or limit, limit)
    if workers <= 1:
        return [extract_hierarchical(a, hierarchy, transport) for a in articles]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: extract_hierarchical(a, hierarchy, transport), articles))


def evaluate_extraction(article, events, transport):
    """Fraction of ``events`` the judge marks True."""
    events = list(events)
    if not events:
        raise EmptyBatch("no extracted events to judge")
    verdicts = parse_judgement(transport.send(build_judge_prompt(article, events)), len(events))
    return Fraction(sum(verdicts), len(events))


def day_index(date, epoch):
    """Days between ISO ``date`` and ISO ``epoch``."""
    return (dt.date.fromisoformat(date[:10]) - dt.date.fromisoformat(epoch[:10])).days


def load_articles(path, epoch=None):
    """JSON lines ``{doc_id, date, title, body}``; ``day`` counts from ``epoch`` when given."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            date = str(rec.get("date", ""))
            day = rec.get("day")
            if day is None:
                day = day_index(date, epoch) if (epoch and date) else 0
            out.append(Article(str(rec["doc_id"]), rec.get("title", ""), rec.get("body", ""), date, int(day)))
    return out


def doc_event_rows(reports):
    """``(doc_id, subject, relation, object)`` rows for :func:`~logo_te.clustering.io.save_doc_events`."""
    return [(rep.doc_id, e.subject_text, e.relation_label, e.object_text) for rep in reports for e in rep.events]
