"""Prompt templates for extraction, entity linking and extraction judging."""

import re
from dataclasses import dataclass

from ..errors import MissingParent, NoChildren
from .hierarchy import NO_SPECIFIC

MAX_PARAGRAPHS = 3

EXAMPLE_ARTICLE = (
    "Egypt committed to boosting economic cooperation with Lebanon (MENAFN- Daily News Egypt) "
    "Egypt is committed to enforcing economic cooperation with Lebanon, President Abdel Fattah "
    "Al-Sisi said during his meeting with Lebanese parliamentary speaker Nabih Berri."
)
EXAMPLE_RESPONSE = (
    "Egypt; Express intent to cooperate; Lebanon | Egypt president Abdel Fattah Al-Sisi; Consult or "
    "meet; Lebanese parliamentary speaker Nabih Berri | Lebanese parliamentary speaker Nabih Berri; "
    "Consult or meet; Egypt president Abdel Fattah Al-Sisi"
)


@dataclass(frozen=True)
class Article:
    doc_id: str
    title: str
    body: str
    date: str = ""
    day: int = 0

    @property
    def paragraphs(self):
        return [p.strip() for p in re.split(r"\n+", self.body) if p.strip()]

    def truncated(self, max_paragraphs=MAX_PARAGRAPHS):
        """Title followed by the first ``max_paragraphs`` body paragraphs."""
        return "\n".join([self.title, *self.paragraphs[:max_paragraphs]])


def candidate_relations(hierarchy, level, parent_relation=None):
    if level not in (1, 2, 3):
        raise ValueError(f"level must be 1, 2 or 3, got {level}")
    if level == 1:
        return list(hierarchy.roots)
    if parent_relation is None:
        raise MissingParent(f"level {level} extraction needs the parent relation")
    kids = hierarchy.children(parent_relation)
    if not kids:
        raise NoChildren(f"relation {parent_relation!r} has no sub-level relations")
    return list(kids)


def build_extraction_prompt(article, level, hierarchy, parent_relation=None, focus=None):
    """Extraction prompt for one article at one hierarchy level.

    Levels 2 and 3 offer the children of ``parent_relation`` plus the
    ``No specific`` escape; ``focus`` is the coarser event being refined.
    """
    candidates = candidate_relations(hierarchy, level, parent_relation)
    if level > 1:
        candidates = candidates + [NO_SPECIFIC]
    rules = [
        "1. Write every event as: first actor; relation; second actor. Separate events with ' | '.",
        f"2. The relation must be copied from this list: {', '.join(candidates)}.",
        "3. Actors are political figures, countries, or international organizations.",
        "4. Skip anything that is only planned or predicted for the future.",
    ]
    if level > 1:
        rules.append(f"5. When none of the listed relations describes the event more precisely "
                     f"than '{parent_relation}', use '{NO_SPECIFIC}' as the relation.")
    parts = [
        "Task: structured event extraction from a news article.",
        "",
        "Rules:",
        *rules,
        "",
        "Example article:",
        EXAMPLE_ARTICLE,
        "Example output:",
        EXAMPLE_RESPONSE,
        "",
    ]
    if focus is not None:
        parts += [f"Event to refine: {focus}", ""]
    parts += [
        "Article:",
        article.truncated(),
        "",
        "Output:",
    ]
    return "\n".join(parts)


def build_linking_prompt(names):
    listing = "\n".join(f"- {n}" for n in names)
    return "\n".join([
        "Entity list:",
        listing,
        "",
        "Link the entities above that name the same real-world person, organization, country or place.",
        "1. Merge only names that refer to exactly the same entity.",
        "2. Answer with one JSON object: each key is the merged name, each value the list of original names it covers.",
        "3. A name with no duplicate maps to a one-element list holding itself.",
        "4. Keep the original names verbatim in the lists, noise included (for example 'U.S.' and '1. U.S.').",
        "5. Output JSON only.",
    ])


def build_judge_prompt(article, events):
    lines = [f"{i}. {e.subject_text}; {e.relation_label}; {e.object_text}" for i, e in enumerate(events, 1)]
    return "\n".join([
        "Task: check extracted events against a news article.",
        "",
        "Rules:",
        "1. Each event reads: subject; relation; object.",
        "2. Mark an event True when the article supports it, False otherwise.",
        "3. Reply with a JSON list of booleans, one per event, in order, e.g. [True, False, True].",
        "",
        "Article:",
        article.truncated(),
        "",
        "Events:",
        *lines,
        "",
        "Check results:",
    ])
