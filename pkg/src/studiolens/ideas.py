"""Idea extraction from document elements and the fluency analytic.

Ideas are normalized unigrams drawn from text content and from supplied
descriptors on non-text elements (captions, labels). Normalization is
deliberately plain: lowercase, split on non-alphanumerics, drop pure numbers
and single characters, drop stopwords. No stemming, no bundled ML. An
external recognizer can contribute descriptors for image/sketch/video/embed
elements through a line-delimited JSON subprocess protocol; recognizer
failures degrade to warnings and never abort extraction.
"""

from __future__ import annotations

import json
import re
import subprocess
from dataclasses import dataclass, field
from importlib import resources

from .model import DesignDocument, Element

ORIGIN_TEXT = "text_token"
ORIGIN_DESCRIPTOR = "supplied_descriptor"
ORIGIN_RECOGNIZER = "recognizer_plugin"

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")
_PURE_NUMBER = re.compile(r"^[0-9]+$")


def default_stopwords() -> frozenset[str]:
    text = resources.files("studiolens.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_stopwords(path) -> frozenset[str]:
    """Load a stopword list, one word per line, UTF-8."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


@dataclass(frozen=True)
class IdeaConfig:
    stopwords: frozenset[str] = field(default_factory=default_stopwords)
    # Keep multiword descriptors as single terms instead of splitting them
    # into tokens. Off by default; see extract_ideas.
    keep_descriptors_whole: bool = False
    recognizer_cmd: tuple[str, ...] = ()
    recognizer_timeout: float = 10.0


@dataclass(frozen=True)
class Idea:
    term: str
    source_element_ids: tuple[str, ...]
    origin: str


@dataclass(frozen=True)
class FluencyResult:
    idea_count: int
    element_counts: dict[str, int]
    ideas: tuple[Idea, ...]
    warnings: tuple[str, ...] = ()


def tokenize(text: str, stopwords: frozenset[str]) -> list[str]:
    """Normalized tokens: lowercase, alphanumeric runs, no numbers or 1-char
    tokens, no stopwords. Duplicates are preserved (callers dedup)."""
    out = []
    for tok in _TOKEN_SPLIT.split(text.lower()):
        if not tok or len(tok) == 1 or _PURE_NUMBER.match(tok):
            continue
        if tok in stopwords:
            continue
        out.append(tok)
    return out


def _whole_descriptor_term(descriptor: str, stopwords: frozenset[str]) -> str | None:
    # Kept-whole descriptors still shed stopword tokens so a term never
    # contains one; "the solar farm" becomes "solar farm".
    toks = tokenize(descriptor, stopwords)
    if not toks:
        return None
    return " ".join(toks)


def _run_recognizer(config: IdeaConfig, elements: list[Element]) -> tuple[dict[str, list[str]], list[str]]:
    """Ask the recognizer subprocess for descriptor terms.

    Protocol: one JSON request per line on stdin ({"element_id", "kind",
    "descriptors"}), one JSON response per line on stdout ({"element_id",
    "terms": [...]}). Any failure (spawn, timeout, bad output) is reported
    as a warning; extraction proceeds without the plugin.
    """
    requests = [
        json.dumps({
            "element_id": e.id,
            "kind": e.kind,
            "descriptors": list(e.content.descriptors),
        })
        for e in elements
    ]
    try:
        proc = subprocess.run(
            list(config.recognizer_cmd),
            input="\n".join(requests) + "\n",
            capture_output=True,
            text=True,
            timeout=config.recognizer_timeout,
        )
    except (OSError, subprocess.TimeoutExpired, ValueError) as exc:
        return {}, [f"recognizer plugin failed: {exc}"]
    if proc.returncode != 0:
        return {}, [f"recognizer plugin exited with status {proc.returncode}"]
    result: dict[str, list[str]] = {}
    warnings = []
    for line in proc.stdout.splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            terms = [t for t in obj["terms"] if isinstance(t, str)]
            result[str(obj["element_id"])] = terms
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            warnings.append(f"recognizer plugin emitted a bad line: {exc}")
    return result, warnings


def extract_ideas(doc: DesignDocument, config: IdeaConfig | None = None) -> tuple[list[Idea], list[str]]:
    """Extract the deduplicated idea set from a document.

    Returns (ideas, warnings). Ideas are ordered term-lexicographically;
    each idea merges the ids of every element that contributed its term.
    An idea's origin is the strongest contributor seen, in the order
    text_token < supplied_descriptor < recognizer_plugin (a term found both
    in text and in a descriptor is reported as a text token).
    """
    config = config or IdeaConfig()
    # term -> (sorted source set, origin rank)
    sources: dict[str, set[str]] = {}
    origins: dict[str, int] = {}
    origin_names = (ORIGIN_TEXT, ORIGIN_DESCRIPTOR, ORIGIN_RECOGNIZER)

    def add(term: str, element_id: str, origin_rank: int):
        sources.setdefault(term, set()).add(element_id)
        if term not in origins or origin_rank < origins[term]:
            origins[term] = origin_rank

    recognizer_terms: dict[str, list[str]] = {}
    warnings: list[str] = []
    if config.recognizer_cmd:
        targets = [e for e in doc.elements if e.kind != "text"]
        if targets:
            recognizer_terms, warnings = _run_recognizer(config, targets)

    for element in doc.elements:
        if element.kind == "text":
            for tok in tokenize(element.content.text or "", config.stopwords):
                add(tok, element.id, 0)
        else:
            for desc in element.content.descriptors:
                if config.keep_descriptors_whole:
                    term = _whole_descriptor_term(desc, config.stopwords)
                    if term is not None:
                        add(term, element.id, 1)
                else:
                    for tok in tokenize(desc, config.stopwords):
                        add(tok, element.id, 1)
            for term in recognizer_terms.get(element.id, []):
                if config.keep_descriptors_whole:
                    normalized = _whole_descriptor_term(term, config.stopwords)
                    if normalized is not None:
                        add(normalized, element.id, 2)
                else:
                    for tok in tokenize(term, config.stopwords):
                        add(tok, element.id, 2)

    ideas = [
        Idea(term=term, source_element_ids=tuple(sorted(sources[term])), origin=origin_names[origins[term]])
        for term in sorted(sources)
    ]
    return ideas, warnings


def fluency(doc: DesignDocument, config: IdeaConfig | None = None) -> FluencyResult:
    """Count distinct ideas and tally elements by kind."""
    ideas, warnings = extract_ideas(doc, config)
    counts: dict[str, int] = {}
    for element in doc.elements:
        counts[element.kind] = counts.get(element.kind, 0) + 1
    return FluencyResult(
        idea_count=len(ideas),
        element_counts=counts,
        ideas=tuple(ideas),
        warnings=tuple(warnings),
    )
