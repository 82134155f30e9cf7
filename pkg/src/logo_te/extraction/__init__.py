"""LLM-driven structured event extraction, entity linking and extraction judging."""

from .hierarchy import CAMEO_ROOTS, NO_SPECIFIC, RelationHierarchy
from .linking import LinkMap, kmeans, link_entities, name_embedding, name_embeddings
from .parsing import ParsedEvent, ParseResult, parse_extraction, parse_judgement, parse_link_response
from .pipeline import (ExtractionReport, doc_event_rows, evaluate_extraction, extract_hierarchical,
                       extract_many, load_articles)
from .prompts import (EXAMPLE_ARTICLE, EXAMPLE_RESPONSE, Article, build_extraction_prompt,
                      build_judge_prompt, build_linking_prompt, candidate_relations)
from .transport import (HttpTransport, MockTransport, RecordingTransport, ReplayTransport, make_transport,
                        prompt_hash, write_replay)

__all__ = [
    "CAMEO_ROOTS", "EXAMPLE_ARTICLE", "EXAMPLE_RESPONSE", "NO_SPECIFIC", "Article", "ExtractionReport",
    "HttpTransport", "LinkMap", "MockTransport", "ParseResult", "ParsedEvent", "RecordingTransport",
    "RelationHierarchy", "ReplayTransport", "build_extraction_prompt", "build_judge_prompt",
    "build_linking_prompt", "candidate_relations", "doc_event_rows", "evaluate_extraction",
    "extract_hierarchical", "extract_many", "kmeans", "link_entities", "load_articles", "make_transport",
    "name_embedding", "name_embeddings", "parse_extraction", "parse_judgement", "parse_link_response",
    "prompt_hash", "write_replay",
]
