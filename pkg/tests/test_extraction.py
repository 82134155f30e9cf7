import io
import json
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logo_te.errors import MalformedJudgement, MissingParent, NoChildren, TransportFailure
from logo_te.extraction import (CAMEO_ROOTS, EXAMPLE_ARTICLE, EXAMPLE_RESPONSE, NO_SPECIFIC, Article, HttpTransport,
                                LinkMap, MockTransport, ParsedEvent, RelationHierarchy, ReplayTransport,
                                build_extraction_prompt, build_judge_prompt, build_linking_prompt, evaluate_extraction,
                                extract_hierarchical, extract_many, kmeans, link_entities, load_articles,
                                name_embeddings, parse_extraction, parse_judgement, parse_link_response, prompt_hash,
                                write_replay)
from logo_te.extraction.transport import RecordingTransport

HIER = RelationHierarchy(children={
    "Express intent to cooperate": ["Express intent to engage in material cooperation", "Express intent to meet"],
    "Consult or meet": ["Discuss by telephone", "Make a visit", "Host a visit"],
})
HIER.add("Make a visit", "Make a state visit")

ARTICLE = Article("a1", "Egypt committed to boosting economic cooperation with Lebanon", EXAMPLE_ARTICLE, "2023-01-02", 7)


# prompts

def test_level1_lists_all_roots_in_order():
    prompt = build_extraction_prompt(ARTICLE, 1, HIER)
    assert ", ".join(CAMEO_ROOTS) in prompt
    assert "Make public statement, Make an appeal or request" in prompt
    assert NO_SPECIFIC not in prompt.split("Example article:")[0]


def test_sub_level_candidates():
    prompt = build_extraction_prompt(ARTICLE, 2, HIER, "Consult or meet")
    assert "Discuss by telephone, Make a visit, Host a visit, No specific" in prompt


def test_missing_parent_and_no_children():
    with pytest.raises(MissingParent):
        build_extraction_prompt(ARTICLE, 2, HIER)
    with pytest.raises(NoChildren):
        build_extraction_prompt(ARTICLE, 2, HIER, "Threaten")
    with pytest.raises(ValueError):
        build_extraction_prompt(ARTICLE, 4, HIER, "Consult or meet")


def test_truncates_to_three_paragraphs():
    body = "\n".join(f"paragraph number {i}" for i in range(10))
    prompt = build_extraction_prompt(Article("x", "The title", body), 1, HIER)
    article_part = prompt.split("Article:\n", 1)[1]
    assert "The title" in article_part
    assert all(f"paragraph number {i}" in article_part for i in range(3))
    assert not any(f"paragraph number {i}" in prompt for i in range(3, 10))


def test_linking_and_judge_prompts():
    p = build_linking_prompt(["U.S.", "United States"])
    assert "- U.S.\n- United States" in p and "JSON" in p
    evs = [ParsedEvent("A", "Consult or meet", "B", 1)]
    j = build_judge_prompt(ARTICLE, evs)
    assert "1. A; Consult or meet; B" in j


# parsing

def test_parse_two_events():
    res = parse_extraction("Egypt; Express intent to cooperate; Lebanon | A; Consult or meet; B", 1, CAMEO_ROOTS)
    assert [(e.subject_text, e.relation_label, e.object_text) for e in res] == [
        ("Egypt", "Express intent to cooperate", "Lebanon"), ("A", "Consult or meet", "B")]
    assert res.warnings == 0


def test_parse_garbled():
    res = parse_extraction("garbled text no separators", 1, CAMEO_ROOTS)
    assert len(res) == 0 and res.warnings == 1


def test_parse_unknown_relation():
    res = parse_extraction("X; Made-up relation; Y", 1, CAMEO_ROOTS)
    assert len(res) == 0 and res.warnings == 1


def test_parse_example_response():
    res = parse_extraction(EXAMPLE_RESPONSE, 1, CAMEO_ROOTS, time=7)
    assert len(res) == 3 and all(e.time == 7 and e.level == 1 for e in res)


segment = st.lists(st.sampled_from(list("ab ;|xyz") + ["Consult or meet"]), max_size=30).map("".join)


@settings(max_examples=200, deadline=None)
@given(segment)
def test_parse_never_throws_and_accounts(text):
    res = parse_extraction(text, 1, CAMEO_ROOTS)
    with_semicolon = sum(1 for seg in text.split("|") if ";" in seg)
    assert len(res.events) + res.warnings >= with_semicolon
    for e in res.events:
        assert e.relation_label in CAMEO_ROOTS or e.relation_label == NO_SPECIFIC


def test_parse_judgement_variants():
    assert parse_judgement("[True, False, True]", 3) == [True, False, True]
    assert parse_judgement("Check results: ['true', 'FALSE']", 2) == [True, False]
    with pytest.raises(MalformedJudgement):
        parse_judgement("[True, False]", 3)
    with pytest.raises(MalformedJudgement):
        parse_judgement("no list", 1)
    with pytest.raises(MalformedJudgement):
        parse_judgement("[True, maybe]", 2)


def test_parse_link_response():
    assert parse_link_response('{"United States": ["U.S.", "1. U.S."]}') == {"United States": ["U.S.", "1. U.S."]}
    assert parse_link_response("not json") is None
    assert parse_link_response('```json\n{"A": ["a", "zz"]}\n```', names=["a"]) == {"A": ["a"]}
    assert parse_link_response('{"A": ["a"], "B": ["a", "b"]}') == {"A": ["a"], "B": ["b"]}


# hierarchical extraction

def scripted(level2=None, level3=None):
    """Mock LLM: level 1 returns the worked example; sub-levels return the given answers."""
    level2 = level2 or {}
    level3 = level3 or {}

    def respond(prompt):
        if "Event to refine:" not in prompt:
            return EXAMPLE_RESPONSE
        focus = prompt.split("Event to refine: ", 1)[1].split("\n", 1)[0]
        rel = focus.split("; ")[1]
        table = level3 if rel in ("Make a visit",) else level2
        return table.get(rel, NO_SPECIFIC)

    return MockTransport(respond)


def test_no_specific_keeps_parent_relation():
    t = scripted()
    rep = extract_hierarchical(ARTICLE, HIER, t)
    assert [str(e) for e in rep.events] == [s.strip() for s in EXAMPLE_RESPONSE.split("|")]
    assert all(e.level == 1 and e.time == 7 for e in rep.events)
    assert rep.calls == len(t.calls) == 4


def test_refinement_to_level_three():
    t = scripted(level2={"Consult or meet": "x; Make a visit; y"}, level3={"Make a visit": "x; Make a state visit; y"})
    rep = extract_hierarchical(ARTICLE, HIER, t)
    rels = [e.relation_label for e in rep.events]
    assert rels == ["Express intent to cooperate", "Make a state visit", "Make a state visit"]
    assert [e.level for e in rep.events] == [1, 3, 3]
    # actors stay as extracted at level 1
    assert rep.events[1].subject_text == "Egypt president Abdel Fattah Al-Sisi"
    assert rep.calls == 1 + 3 + 2


def test_invalid_refinement_keeps_parent():
    t = scripted(level2={"Consult or meet": "x; Threaten; y"})
    rep = extract_hierarchical(ARTICLE, HIER, t)
    assert rep.events[1].relation_label == "Consult or meet" and rep.warnings >= 2


def test_empty_level1_short_circuits():
    t = MockTransport(default="")
    rep = extract_hierarchical(ARTICLE, HIER, t)
    assert rep.events == [] and len(t.calls) == 1


def test_call_bound_property():
    rng = np.random.default_rng(0)
    rels = list(CAMEO_ROOTS) + ["Made up"]
    for _ in range(50):
        n = int(rng.integers(0, 6))
        l1 = " | ".join(f"a{i}; {rels[int(rng.integers(len(rels)))]}; b{i}" for i in range(n))
        kids = ["Discuss by telephone", "Make a visit", "Host a visit", NO_SPECIFIC, "junk"]
        t = MockTransport(lambda p, l1=l1: l1 if "Event to refine" not in p else
                          f"a; {kids[int(rng.integers(len(kids)))]}; b")
        rep = extract_hierarchical(ARTICLE, HIER, t)
        valid1 = len(parse_extraction(l1, 1, CAMEO_ROOTS).events)
        valid2 = sum(1 for e in rep.events if e.level >= 2)
        assert len(t.calls) <= 1 + valid1 + valid2


def test_transport_failure_partial_results():
    def respond(prompt):
        if "Event to refine" in prompt:
            raise TransportFailure("down")
        return EXAMPLE_RESPONSE

    rep = extract_hierarchical(ARTICLE, HIER, MockTransport(respond))
    assert len(rep.events) == 3 and len(rep.failures) == 3 and not rep.ok

    def dead(prompt):
        raise TransportFailure("down")

    rep = extract_hierarchical(ARTICLE, HIER, MockTransport(dead))
    assert rep.events == [] and rep.failures


def test_extract_many_keeps_order_and_is_deterministic():
    arts = [replace(ARTICLE, doc_id=f"d{i}", day=i) for i in range(8)]
    a = extract_many(arts, HIER, scripted())
    b = extract_many(arts, HIER, scripted(), workers=1)
    assert [r.doc_id for r in a] == [f"d{i}" for i in range(8)]
    assert [r.events for r in a] == [r.events for r in b]


# judging

def test_precision_fraction():
    evs = parse_extraction(EXAMPLE_RESPONSE, 1, CAMEO_ROOTS).events
    assert evaluate_extraction(ARTICLE, evs, MockTransport(default="[True, False, True]")) == Fraction(2, 3)
    assert evaluate_extraction(ARTICLE, evs, MockTransport(default="[True, True, True]")) == 1
    with pytest.raises(MalformedJudgement):
        evaluate_extraction(ARTICLE, evs, MockTransport(default="[True]"))


# transports

def test_replay_transport(tmp_path):
    path = tmp_path / "replay.jsonl"
    write_replay(str(path), [("hello", "world")])
    t = ReplayTransport(str(path))
    assert t.send("hello") == "world"
    assert json.loads(path.read_text())["prompt_hash"] == prompt_hash("hello")
    with pytest.raises(TransportFailure):
        t.send("other")


def test_recording_then_replay(tmp_path):
    path = tmp_path / "rec.jsonl"
    rec = RecordingTransport(scripted(), str(path))
    first = extract_hierarchical(ARTICLE, HIER, rec)
    again = extract_hierarchical(ARTICLE, HIER, ReplayTransport(str(path)))
    assert first.events == again.events


class FakeResponse(io.BytesIO):
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def test_http_transport_protocol(monkeypatch):
    seen = []

    def opener(req, timeout):
        seen.append((req, timeout))
        return FakeResponse(json.dumps({"content": "ok"}).encode())

    monkeypatch.setenv("TEST_KEY", "sekrit")
    t = HttpTransport("http://llm.invalid/chat", model="m", timeout=3.0, api_key_env="TEST_KEY", opener=opener)
    assert t.send("hi") == "ok"
    req, timeout = seen[0]
    assert timeout == 3.0
    assert json.loads(req.data) == {"model": "m", "messages": [{"role": "user", "content": "hi"}]}
    assert req.get_header("Authorization") == "Bearer sekrit"


def test_http_transport_bounded_retries():
    attempts = []

    def opener(req, timeout):
        attempts.append(1)
        raise OSError("connection refused")

    t = HttpTransport("http://llm.invalid", retries=2, backoff=0.0, opener=opener)
    with pytest.raises(TransportFailure):
        t.send("hi")
    assert len(attempts) == 3


# entity linking

def test_link_example():
    names = ["U.S.", "1. U.S.", "United States", "Egypt"]
    t = MockTransport(default='{"United States": ["U.S.", "1. U.S."]}')
    link, bad = link_entities(names, 1, t)
    assert link["U.S."] == "United States" and link["1. U.S."] == "United States"
    assert link["Egypt"] == "Egypt" and bad == 0


def test_link_unparseable_leaves_batch():
    link, bad = link_entities(["a", "b", "c"], 1, MockTransport(default="sorry"), rounds=2)
    # the same batch comes back in round 2 and fails again
    assert len(link) == 0 and bad == 2


def test_linkmap_invariants_and_apply():
    link = LinkMap({"United States": ["U.S.", "USA"]})
    link.add("United States", "America")
    link.add("America", "America")
    groups = link.groups()
    assert groups == {"America": ["U.S.", "USA", "United States"]}
    evs = [ParsedEvent("U.S.", "Consult or meet", "Egypt", 1, 3), ParsedEvent("USA", "Threaten", "U.S.", 2, 4)]
    once = link.apply(evs)
    assert link.apply(once) == once
    assert len(once) == len(evs)
    assert [(e.relation_label, e.level, e.time) for e in once] == [(e.relation_label, e.level, e.time) for e in evs]
    assert once[1].object_text == "America"
    aliases = [a for al in groups.values() for a in al]
    assert len(aliases) == len(set(aliases))


def test_second_round_uses_canonical_names():
    prompts = []

    def respond(p):
        prompts.append(p)
        return '{"United States": ["U.S.", "US"]}' if "- US" in p else "{}"

    link_entities(["U.S.", "US", "Egypt", "Egypt Gov"], 1, MockTransport(respond), rounds=2)
    assert "- United States" in prompts[1] or "- US\n" not in prompts[1]


def test_kmeans_deterministic_and_nonempty():
    X = name_embeddings([f"name {i}" for i in range(30)] + ["x"] * 5)
    a, b = kmeans(X, 6, seed=3), kmeans(X, 6, seed=3)
    assert np.array_equal(a, b)
    assert set(a) == set(range(6))
    with pytest.raises(ValueError):
        kmeans(X, 0)


def test_name_embeddings_unit_norm():
    E = name_embeddings(["Egypt", "egypt", "Lebanon"])
    assert E.shape == (3, 256)
    assert np.allclose(np.linalg.norm(E, axis=1), 1.0)
    assert np.array_equal(E[0], E[1])


def test_load_articles(tmp_path):
    p = tmp_path / "a.jsonl"
    p.write_text(json.dumps({"doc_id": 1, "date": "2023-01-11", "title": "T", "body": "B"}) + "\n")
    (art,) = load_articles(str(p), epoch="2023-01-01")
    assert art.doc_id == "1" and art.day == 10
