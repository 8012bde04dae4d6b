"""Design-document data model, JSON (de)serialization, and validation.

A document is a versioned scene of typed, styled, positioned elements on a
canvas. The on-disk format is a UTF-8 JSON object with snake_case keys
mirroring the dataclasses below; colors are ``[r, g, b]`` or ``[r, g, b, a]``
arrays. Process logs are newline-delimited JSON, one event per line. The
formats are documented in ``docs/document.schema.json`` and versioned via the
``schema_version`` field.

All values are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

SCHEMA_VERSION = 1

ELEMENT_KINDS = ("text", "image", "sketch", "video", "embed")
SEMANTIC_TYPES = ("heading", "subheading", "body", "caption", "figure", "label", "other")
FONT_WEIGHTS = ("normal", "bold", "light")
FONT_STYLES = ("normal", "italic", "oblique")
EVENT_ACTIONS = ("create", "move", "resize", "restyle", "delete", "zoom", "select_group")


class DocumentError(Exception):
    """Base error for document parsing and validation."""


class SyntaxFault(DocumentError):
    """Malformed JSON; carries the position reported by the decoder."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SchemaFault(DocumentError):
    """Wrong shape or type; carries the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantFault(DocumentError):
    """Structurally valid but semantically inconsistent (duplicate id, bad range)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class Color:
    r: int
    g: int
    b: int
    a: float = 1.0

    def __post_init__(self):
        for name in ("r", "g", "b"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= 255:
                raise InvariantFault(f"color.{name}", f"channel must be an integer in 0..255, got {v!r}")
        if not 0.0 <= self.a <= 1.0:
            raise InvariantFault("color.a", f"alpha must be in 0..1, got {self.a!r}")

    def to_json(self) -> list:
        if self.a == 1.0:
            return [self.r, self.g, self.b]
        return [self.r, self.g, self.b, self.a]

    @staticmethod
    def from_json(value, path: str) -> "Color":
        if not isinstance(value, list) or len(value) not in (3, 4):
            raise SchemaFault(path, "color must be [r,g,b] or [r,g,b,a]")
        r, g, b = value[0], value[1], value[2]
        a = float(value[3]) if len(value) == 4 else 1.0
        try:
            return Color(r, g, b, a)
        except InvariantFault as exc:
            raise InvariantFault(path, str(exc)) from None


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def diagonal(self) -> float:
        return (self.w * self.w + self.h * self.h) ** 0.5

    def contains_point(self, px: float, py: float) -> bool:
        # Half-open on the far edges so adjacent boxes never double-claim a point.
        return self.x <= px < self.x + self.w and self.y <= py < self.y + self.h

    def intersection_area(self, other: "BBox") -> float:
        iw = min(self.x + self.w, other.x + other.w) - max(self.x, other.x)
        ih = min(self.y + self.h, other.y + other.h) - max(self.y, other.y)
        if iw <= 0 or ih <= 0:
            return 0.0
        return iw * ih

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}


@dataclass(frozen=True)
class Style:
    font_family: str | None = None
    font_size: float | None = None
    font_weight: str | None = None
    font_style: str | None = None
    fill: Color | None = None
    stroke: Color | None = None
    background: Color | None = None

    def to_json(self) -> dict:
        out: dict = {}
        if self.font_family is not None:
            out["font_family"] = self.font_family
        if self.font_size is not None:
            out["font_size"] = self.font_size
        if self.font_weight is not None:
            out["font_weight"] = self.font_weight
        if self.font_style is not None:
            out["font_style"] = self.font_style
        for name in ("fill", "stroke", "background"):
            c = getattr(self, name)
            if c is not None:
                out[name] = c.to_json()
        return out


EMPTY_STYLE = Style()


@dataclass(frozen=True)
class Content:
    """Element payload: text for text elements, descriptor strings otherwise."""

    text: str | None = None
    descriptors: tuple[str, ...] = ()

    def to_json(self) -> dict:
        if self.text is not None:
            return {"text": self.text}
        return {"descriptors": list(self.descriptors)}


@dataclass(frozen=True)
class Element:
    id: str
    kind: str
    bbox: BBox
    style: Style = EMPTY_STYLE
    content: Content = Content(text=None, descriptors=())
    zoom_level: float | None = None
    semantic_type: str | None = None
    author_id: str | None = None

    def to_json(self) -> dict:
        out: dict = {
            "id": self.id,
            "kind": self.kind,
            "bbox": self.bbox.to_json(),
            "style": self.style.to_json(),
            "content": self.content.to_json(),
        }
        if self.zoom_level is not None:
            out["zoom_level"] = self.zoom_level
        if self.semantic_type is not None:
            out["semantic_type"] = self.semantic_type
        if self.author_id is not None:
            out["author_id"] = self.author_id
        return out


@dataclass(frozen=True)
class Canvas:
    width: float
    height: float

    @property
    def diagonal(self) -> float:
        return (self.width * self.width + self.height * self.height) ** 0.5


@dataclass(frozen=True)
class DesignDocument:
    doc_id: str
    version: int
    canvas: Canvas
    background: Color
    elements: tuple[Element, ...]
    team_id: str | None = None
    author_ids: tuple[str, ...] = ()
    created_at: str | None = None

    def element_by_id(self, element_id: str) -> Element | None:
        return self._index().get(element_id)

    def _index(self) -> dict[str, Element]:
        # Cached on first use; the dataclass itself stays frozen.
        idx = getattr(self, "_idx", None)
        if idx is None:
            idx = {e.id: e for e in self.elements}
            object.__setattr__(self, "_idx", idx)
        return idx

    def element_ids(self) -> list[str]:
        return [e.id for e in self.elements]

    def restricted_to(self, element_ids) -> "DesignDocument":
        """Sub-document keeping only the given elements, paint order preserved."""
        keep = set(element_ids)
        return DesignDocument(
            doc_id=self.doc_id,
            version=self.version,
            canvas=self.canvas,
            background=self.background,
            elements=tuple(e for e in self.elements if e.id in keep),
            team_id=self.team_id,
            author_ids=self.author_ids,
            created_at=self.created_at,
        )

    def to_json(self) -> dict:
        out: dict = {
            "schema_version": SCHEMA_VERSION,
            "doc_id": self.doc_id,
            "version": self.version,
            "canvas": {"width": self.canvas.width, "height": self.canvas.height},
            "background": self.background.to_json(),
            "elements": [e.to_json() for e in self.elements],
        }
        if self.team_id is not None:
            out["team_id"] = self.team_id
        if self.author_ids:
            out["author_ids"] = list(self.author_ids)
        if self.created_at is not None:
            out["created_at"] = self.created_at
        return out


@dataclass(frozen=True)
class ProcessEvent:
    timestamp: str
    actor_id: str
    action: str
    element_ids: tuple[str, ...] = ()
    viewport_zoom: float | None = None


@dataclass(frozen=True)
class VersionChain:
    doc_id: str
    versions: tuple[DesignDocument, ...]  # sorted ascending by version number
    gaps: tuple[tuple[int, int], ...] = ()  # (from, to) pairs with missing versions between

    def latest(self) -> DesignDocument:
        return self.versions[-1]


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaFault(f"{path}.{key}" if path else key, "missing required field")
    return obj[key]


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaFault(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaFault(path, f"expected a string, got {type(value).__name__}")
    return value


def _as_enum(value, allowed, path: str) -> str:
    s = _as_str(value, path)
    if s not in allowed:
        raise SchemaFault(path, f"expected one of {sorted(allowed)}, got {s!r}")
    return s


def _parse_bbox(obj, path: str) -> BBox:
    if not isinstance(obj, dict):
        raise SchemaFault(path, "bbox must be an object")
    x = _as_number(_require(obj, "x", path), f"{path}.x")
    y = _as_number(_require(obj, "y", path), f"{path}.y")
    w = _as_number(_require(obj, "w", path), f"{path}.w")
    h = _as_number(_require(obj, "h", path), f"{path}.h")
    if w <= 0 or h <= 0:
        raise InvariantFault(path, f"zero-area element bbox rejected (w={w}, h={h})")
    return BBox(x, y, w, h)


def _parse_style(obj, path: str) -> Style:
    if obj is None:
        return EMPTY_STYLE
    if not isinstance(obj, dict):
        raise SchemaFault(path, "style must be an object")
    kwargs: dict = {}
    if "font_family" in obj:
        kwargs["font_family"] = _as_str(obj["font_family"], f"{path}.font_family")
    if "font_size" in obj:
        size = _as_number(obj["font_size"], f"{path}.font_size")
        if size <= 0:
            raise InvariantFault(f"{path}.font_size", f"font size must be > 0, got {size}")
        kwargs["font_size"] = size
    if "font_weight" in obj:
        kwargs["font_weight"] = _as_enum(obj["font_weight"], FONT_WEIGHTS, f"{path}.font_weight")
    if "font_style" in obj:
        kwargs["font_style"] = _as_enum(obj["font_style"], FONT_STYLES, f"{path}.font_style")
    for name in ("fill", "stroke", "background"):
        if name in obj:
            kwargs[name] = Color.from_json(obj[name], f"{path}.{name}")
    return Style(**kwargs)


def _parse_content(obj, kind: str, path: str) -> Content:
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise SchemaFault(path, "content must be an object")
    if kind == "text":
        text = obj.get("text", "")
        if not isinstance(text, str):
            raise SchemaFault(f"{path}.text", "text content must carry a string")
        return Content(text=text)
    descriptors = obj.get("descriptors", [])
    if not isinstance(descriptors, list) or any(not isinstance(d, str) for d in descriptors):
        raise SchemaFault(f"{path}.descriptors", "descriptors must be a list of strings")
    return Content(text=None, descriptors=tuple(descriptors))


def _parse_element(obj, path: str) -> Element:
    if not isinstance(obj, dict):
        raise SchemaFault(path, "element must be an object")
    eid = _as_str(_require(obj, "id", path), f"{path}.id")
    kind = _as_enum(_require(obj, "kind", path), ELEMENT_KINDS, f"{path}.kind")
    bbox = _parse_bbox(_require(obj, "bbox", path), f"{path}.bbox")
    style = _parse_style(obj.get("style"), f"{path}.style")
    content = _parse_content(obj.get("content"), kind, f"{path}.content")
    zoom = None
    if "zoom_level" in obj and obj["zoom_level"] is not None:
        zoom = _as_number(obj["zoom_level"], f"{path}.zoom_level")
        if zoom < 0:
            raise InvariantFault(f"{path}.zoom_level", f"zoom level must be >= 0, got {zoom}")
    semantic = None
    if "semantic_type" in obj and obj["semantic_type"] is not None:
        semantic = _as_enum(obj["semantic_type"], SEMANTIC_TYPES, f"{path}.semantic_type")
    author = None
    if "author_id" in obj and obj["author_id"] is not None:
        author = _as_str(obj["author_id"], f"{path}.author_id")
    return Element(
        id=eid, kind=kind, bbox=bbox, style=style, content=content,
        zoom_level=zoom, semantic_type=semantic, author_id=author,
    )


def parse_document(data: bytes | str) -> DesignDocument:
    """Parse and validate a document from its JSON interchange form.

    Raises SyntaxFault on malformed JSON (with position), SchemaFault on
    shape/type problems (with field path), and InvariantFault on semantic
    violations such as duplicate element ids.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SyntaxFault(exc.msg, exc.lineno, exc.colno) from None
    return document_from_json(obj)


def document_from_json(obj) -> DesignDocument:
    if not isinstance(obj, dict):
        raise SchemaFault("", "document must be a JSON object")
    doc_id = _as_str(_require(obj, "doc_id", ""), "doc_id")
    version = _require(obj, "version", "")
    if isinstance(version, bool) or not isinstance(version, int) or version < 1:
        raise SchemaFault("version", f"version must be an integer >= 1, got {version!r}")
    canvas_obj = _require(obj, "canvas", "")
    if not isinstance(canvas_obj, dict):
        raise SchemaFault("canvas", "canvas must be an object")
    width = _as_number(_require(canvas_obj, "width", "canvas"), "canvas.width")
    height = _as_number(_require(canvas_obj, "height", "canvas"), "canvas.height")
    if width <= 0 or height <= 0:
        raise InvariantFault("canvas", f"canvas dimensions must be positive, got {width}x{height}")
    background = Color.from_json(obj.get("background", [255, 255, 255]), "background")

    elements_obj = obj.get("elements", [])
    if not isinstance(elements_obj, list):
        raise SchemaFault("elements", "elements must be a list")
    elements = []
    seen: set[str] = set()
    for i, el_obj in enumerate(elements_obj):
        el = _parse_element(el_obj, f"elements[{i}]")
        if el.id in seen:
            raise InvariantFault(f"elements[{i}].id", f"duplicate element id {el.id!r}")
        seen.add(el.id)
        elements.append(el)

    team_id = None
    if "team_id" in obj and obj["team_id"] is not None:
        team_id = _as_str(obj["team_id"], "team_id")
    author_ids: tuple[str, ...] = ()
    if "author_ids" in obj and obj["author_ids"] is not None:
        raw = obj["author_ids"]
        if not isinstance(raw, list) or any(not isinstance(a, str) for a in raw):
            raise SchemaFault("author_ids", "author_ids must be a list of strings")
        author_ids = tuple(raw)
    created_at = None
    if "created_at" in obj and obj["created_at"] is not None:
        created_at = _as_str(obj["created_at"], "created_at")

    return DesignDocument(
        doc_id=doc_id, version=version, canvas=Canvas(width, height),
        background=background, elements=tuple(elements),
        team_id=team_id, author_ids=author_ids, created_at=created_at,
    )


def serialize_document(doc: DesignDocument, pretty: bool = False) -> str:
    if pretty:
        return json.dumps(doc.to_json(), indent=2, sort_keys=True)
    return json.dumps(doc.to_json(), sort_keys=True, separators=(",", ":"))


def parse_process_log(data: bytes | str) -> list[ProcessEvent]:
    """Parse a newline-delimited JSON process log, one event per line."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    events = []
    for lineno, line in enumerate(data.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SyntaxFault(f"process log line {lineno}: {exc.msg}", lineno, exc.colno) from None
        path = f"events[{lineno}]"
        action = _as_enum(_require(obj, "action", path), EVENT_ACTIONS, f"{path}.action")
        ids = obj.get("element_ids", [])
        if not isinstance(ids, list) or any(not isinstance(i, str) for i in ids):
            raise SchemaFault(f"{path}.element_ids", "element_ids must be a list of strings")
        zoom = obj.get("viewport_zoom")
        if zoom is not None:
            zoom = _as_number(zoom, f"{path}.viewport_zoom")
        events.append(ProcessEvent(
            timestamp=_as_str(_require(obj, "timestamp", path), f"{path}.timestamp"),
            actor_id=_as_str(_require(obj, "actor_id", path), f"{path}.actor_id"),
            action=action,
            element_ids=tuple(ids),
            viewport_zoom=zoom,
        ))
    return events


def validate_version_chain(versions: list[DesignDocument]) -> VersionChain:
    """Order document versions into a chain, flagging numbering gaps.

    All inputs must share a doc_id; duplicate version numbers are rejected.
    """
    if not versions:
        raise InvariantFault("versions", "cannot build a chain from zero versions")
    doc_id = versions[0].doc_id
    for v in versions[1:]:
        if v.doc_id != doc_id:
            raise InvariantFault(
                "versions",
                f"mixed doc_ids in chain: {doc_id!r} vs {v.doc_id!r}",
            )
    ordered = sorted(versions, key=lambda d: d.version)
    for a, b in zip(ordered, ordered[1:]):
        if a.version == b.version:
            raise InvariantFault("versions", f"duplicate version number {a.version}")
    gaps = tuple(
        (a.version, b.version)
        for a, b in zip(ordered, ordered[1:])
        if b.version - a.version > 1
    )
    return VersionChain(doc_id=doc_id, versions=tuple(ordered), gaps=gaps)
