import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from studiolens.model import parse_document
from studiolens.semantics import load_embeddings

FIXTURES = Path(__file__).parent / "fixtures"

DOCUMENT_FIXTURES = [
    "minimal.json",
    "poster_v1.json",
    "poster_v2.json",
    "scales_lopsided.json",
    "rule.json",
    "untyped_cards.json",
]


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_doc(name: str):
    return parse_document(fixture_path(name).read_bytes())


@pytest.fixture(scope="session")
def poster_v1():
    return load_doc("poster_v1.json")


@pytest.fixture(scope="session")
def poster_v2():
    return load_doc("poster_v2.json")


@pytest.fixture(scope="session")
def lopsided():
    return load_doc("scales_lopsided.json")


@pytest.fixture(scope="session")
def toy_table():
    return load_embeddings(fixture_path("toy_vectors.txt"))


def make_doc(elements, doc_id="doc", version=1, width=1000.0, height=1000.0,
             background=(255, 255, 255), team_id=None, author_ids=()):
    obj = {
        "doc_id": doc_id,
        "version": version,
        "canvas": {"width": width, "height": height},
        "background": list(background),
        "elements": elements,
    }
    if team_id:
        obj["team_id"] = team_id
    if author_ids:
        obj["author_ids"] = list(author_ids)
    return parse_document(json.dumps(obj))


def text_el(eid, x, y, w, h, text="", semantic_type=None, author_id=None, **style):
    el = {
        "id": eid, "kind": "text",
        "bbox": {"x": x, "y": y, "w": w, "h": h},
        "content": {"text": text},
    }
    if style:
        el["style"] = style
    if semantic_type:
        el["semantic_type"] = semantic_type
    if author_id:
        el["author_id"] = author_id
    return el


def image_el(eid, x, y, w, h, descriptors=(), fill=None, author_id=None, zoom_level=None):
    el = {
        "id": eid, "kind": "image",
        "bbox": {"x": x, "y": y, "w": w, "h": h},
        "content": {"descriptors": list(descriptors)},
    }
    if fill is not None:
        el["style"] = {"fill": list(fill)}
    if author_id:
        el["author_id"] = author_id
    if zoom_level is not None:
        el["zoom_level"] = zoom_level
    return el
