"""Feedback layer: annotations, version diffs, status tracking, and the
contested-analytics label store.

Annotations anchor to element ids first and to a canvas region as fallback;
region anchors re-map across versions through bbox overlap. Status moves
along open -> touched -> addressed -> validated. Edits alone only reach
"touched": feedback often goes unincorporated even when the geometry around
it changes, so closing an annotation takes an explicit human action, and
each transition emits a notification event.

Contest records capture human verdicts on computed analytics. The stores
are append-only newline-delimited JSON logs, one file per document, and the
label export is a deterministic, timestamp-ordered stream.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from .model import BBox, DesignDocument, VersionChain

ANNOTATION_KINDS = ("redline", "digitized_verbal", "analytic_generated")
ANNOTATION_STATUSES = ("open", "touched", "addressed", "validated")
VERDICTS = ("valid", "invalid")

LABEL_SCHEMA_VERSION = 1


class FeedbackError(Exception):
    pass


class TransitionError(FeedbackError):
    pass


@dataclass(frozen=True)
class Annotation:
    id: str
    doc_id: str
    created_version: int
    author_id: str
    kind: str
    body: str
    target_element_ids: tuple[str, ...] = ()
    target_region: BBox | None = None
    status: str = "open"
    resolved_version: int | None = None
    touched_version: int | None = None
    category: str | None = None
    flag: bool = False
    source_item_ref: str | None = None

    def __post_init__(self):
        if self.kind not in ANNOTATION_KINDS:
            raise FeedbackError(f"unknown annotation kind {self.kind!r}")
        if self.status not in ANNOTATION_STATUSES:
            raise FeedbackError(f"unknown annotation status {self.status!r}")
        if not self.target_element_ids and self.target_region is None:
            raise FeedbackError("annotation needs target elements or a target region")
        if self.resolved_version is not None and self.resolved_version < self.created_version:
            raise FeedbackError("resolved_version precedes created_version")
        if self.status in ("addressed", "validated") and self.resolved_version is None:
            raise FeedbackError(f"status {self.status} requires resolved_version")

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "doc_id": self.doc_id,
            "created_version": self.created_version,
            "author_id": self.author_id,
            "kind": self.kind,
            "body": self.body,
            "target_element_ids": list(self.target_element_ids),
            "status": self.status,
            "flag": self.flag,
        }
        if self.target_region is not None:
            out["target_region"] = self.target_region.to_json()
        if self.resolved_version is not None:
            out["resolved_version"] = self.resolved_version
        if self.touched_version is not None:
            out["touched_version"] = self.touched_version
        if self.category is not None:
            out["category"] = self.category
        if self.source_item_ref is not None:
            out["source_item_ref"] = self.source_item_ref
        return out

    @staticmethod
    def from_json(obj: dict) -> "Annotation":
        region = obj.get("target_region")
        return Annotation(
            id=obj["id"],
            doc_id=obj["doc_id"],
            created_version=obj["created_version"],
            author_id=obj["author_id"],
            kind=obj["kind"],
            body=obj.get("body", ""),
            target_element_ids=tuple(obj.get("target_element_ids", [])),
            target_region=BBox(region["x"], region["y"], region["w"], region["h"]) if region else None,
            status=obj.get("status", "open"),
            resolved_version=obj.get("resolved_version"),
            touched_version=obj.get("touched_version"),
            category=obj.get("category"),
            flag=obj.get("flag", False),
            source_item_ref=obj.get("source_item_ref"),
        )


@dataclass(frozen=True)
class VersionDiff:
    doc_id: str
    from_version: int
    to_version: int
    added: tuple[str, ...]
    removed: tuple[str, ...]
    modified: tuple[dict, ...]  # {"element_id", "deltas": {path: [old, new]}}

    def modified_ids(self) -> set[str]:
        return {m["element_id"] for m in self.modified}

    def is_empty(self) -> bool:
        return not self.added and not self.removed and not self.modified

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "from_version": self.from_version,
            "to_version": self.to_version,
            "added": list(self.added),
            "removed": list(self.removed),
            "modified": list(self.modified),
        }


def _flatten(obj, prefix="") -> dict:
    out = {}
    if isinstance(obj, dict):
        for key, value in obj.items():
            out.update(_flatten(value, f"{prefix}.{key}" if prefix else key))
    else:
        out[prefix] = obj
    return out


def diff(v_from: DesignDocument, v_to: DesignDocument) -> VersionDiff:
    """Identity-based element diff between two versions of one document."""
    if v_from.doc_id != v_to.doc_id:
        raise FeedbackError(f"cannot diff across documents: {v_from.doc_id!r} vs {v_to.doc_id!r}")
    if v_from.version >= v_to.version:
        raise FeedbackError("diff requires from_version < to_version")
    from_map = {e.id: e for e in v_from.elements}
    to_map = {e.id: e for e in v_to.elements}
    added = tuple(sorted(set(to_map) - set(from_map)))
    removed = tuple(sorted(set(from_map) - set(to_map)))
    modified = []
    for eid in sorted(set(from_map) & set(to_map)):
        old = _flatten(from_map[eid].to_json())
        new = _flatten(to_map[eid].to_json())
        deltas = {}
        for path in sorted(set(old) | set(new)):
            if old.get(path) != new.get(path):
                deltas[path] = [old.get(path), new.get(path)]
        if deltas:
            modified.append({"element_id": eid, "deltas": deltas})
    return VersionDiff(
        doc_id=v_from.doc_id,
        from_version=v_from.version,
        to_version=v_to.version,
        added=added,
        removed=removed,
        modified=tuple(modified),
    )


def chain_diffs(chain: VersionChain) -> list[VersionDiff]:
    return [diff(a, b) for a, b in zip(chain.versions, chain.versions[1:])]


@dataclass(frozen=True)
class StatusAction:
    annotation_id: str
    actor_id: str
    role: str        # "student" or "instructor"
    action: str      # "mark_addressed" or "validate"
    version: int


@dataclass(frozen=True)
class NotificationEvent:
    annotation_id: str
    transition: str
    version: int
    recipient: str

    def to_json(self) -> dict:
        return {
            "annotation_id": self.annotation_id,
            "transition": self.transition,
            "version": self.version,
            "recipient": self.recipient,
        }


def region_targets(doc: DesignDocument, region: BBox) -> list[str]:
    """Elements anchored by a region: bbox overlap of at least half the
    element's own area."""
    out = []
    for element in doc.elements:
        area = element.bbox.w * element.bbox.h
        if area > 0 and region.intersection_area(element.bbox) >= 0.5 * area:
            out.append(element.id)
    return out


def _targets_at(annotation: Annotation, doc: DesignDocument) -> set[str]:
    if annotation.target_element_ids:
        return set(annotation.target_element_ids)
    return set(region_targets(doc, annotation.target_region))


def update_statuses(
    chain: VersionChain,
    annotations: list[Annotation],
    diffs: list[VersionDiff] | None = None,
    actions: list[StatusAction] | None = None,
    validator_roles: tuple[str, ...] = ("instructor",),
) -> tuple[list[Annotation], list[NotificationEvent]]:
    """Advance annotation statuses along the version chain.

    Edits touching an annotation's targets move it open -> touched. An
    explicit mark_addressed action (from open or touched) sets addressed; a
    validate action from a permitted role moves addressed -> validated. Each
    transition emits a notification to the annotation's author.
    """
    if diffs is None:
        diffs = chain_diffs(chain)
    by_version = {d.from_version: d for d in diffs}
    current = {a.id: a for a in annotations}
    notifications: list[NotificationEvent] = []

    def transition(annotation: Annotation, **changes) -> Annotation:
        updated = replace(annotation, **changes)
        current[annotation.id] = updated
        notifications.append(NotificationEvent(
            annotation_id=annotation.id,
            transition=f"{annotation.status}->{updated.status}",
            version=changes.get("touched_version") or changes.get("resolved_version") or 0,
            recipient=annotation.author_id,
        ))
        return updated

    # Geometry pass: walk the chain in order and mark touched annotations.
    for v_from, v_to in zip(chain.versions, chain.versions[1:]):
        step = by_version.get(v_from.version)
        if step is None:
            continue
        changed = step.modified_ids() | set(step.removed)
        for annotation in list(current.values()):
            if annotation.status != "open" or annotation.created_version > v_from.version:
                continue
            if _targets_at(annotation, v_from) & changed:
                transition(annotation, status="touched", touched_version=step.to_version)

    # Action pass: explicit human transitions, applied in arrival order.
    for action in actions or []:
        annotation = current.get(action.annotation_id)
        if annotation is None:
            raise FeedbackError(f"unknown annotation id {action.annotation_id!r}")
        if action.action == "mark_addressed":
            if annotation.status not in ("open", "touched"):
                raise TransitionError(
                    f"cannot mark {annotation.id} addressed from status {annotation.status}")
            transition(annotation, status="addressed", resolved_version=action.version)
        elif action.action == "validate":
            if action.role not in validator_roles:
                raise TransitionError(f"role {action.role!r} may not validate")
            if annotation.status != "addressed":
                raise TransitionError(
                    f"cannot validate {annotation.id} from status {annotation.status}")
            transition(annotation, status="validated", resolved_version=action.version)
        else:
            raise FeedbackError(f"unknown action {action.action!r}")

    ordered = [current[a.id] for a in annotations]
    return ordered, notifications


@dataclass(frozen=True)
class ContestRecord:
    id: str
    doc_id: str
    version: int
    analytic: str
    computed_value: object
    verdict: str
    rationale: str
    author_id: str
    timestamp: str
    user_value: object = None
    config_snapshot_ref: str | None = None

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise FeedbackError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")
        if self.verdict == "invalid" and not self.rationale.strip():
            raise FeedbackError("an invalid verdict requires a rationale")
        if self.verdict == "valid" and self.user_value is not None:
            raise FeedbackError("user_value only accompanies an invalid verdict")

    def to_json(self) -> dict:
        return {
            "schema_version": LABEL_SCHEMA_VERSION,
            "id": self.id,
            "doc_id": self.doc_id,
            "version": self.version,
            "analytic": self.analytic,
            "computed_value": self.computed_value,
            "verdict": self.verdict,
            "user_value": self.user_value,
            "rationale": self.rationale,
            "author_id": self.author_id,
            "timestamp": self.timestamp,
            "config_snapshot_ref": self.config_snapshot_ref,
        }

    @staticmethod
    def from_json(obj: dict) -> "ContestRecord":
        return ContestRecord(
            id=obj["id"],
            doc_id=obj["doc_id"],
            version=obj["version"],
            analytic=obj["analytic"],
            computed_value=obj.get("computed_value"),
            verdict=obj["verdict"],
            rationale=obj.get("rationale", ""),
            author_id=obj["author_id"],
            timestamp=obj["timestamp"],
            user_value=obj.get("user_value"),
            config_snapshot_ref=obj.get("config_snapshot_ref"),
        )


_SAFE_NAME = re.compile(r"[^A-Za-z0-9._-]")


def _safe_filename(doc_id: str) -> str:
    return _SAFE_NAME.sub("_", doc_id) or "_"


class _NdjsonStore:
    """Append-only newline-delimited JSON log, one file per document."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, doc_id: str) -> Path:
        return self.directory / f"{_safe_filename(doc_id)}.ndjson"

    def append(self, doc_id: str, obj: dict) -> None:
        line = json.dumps(obj, sort_keys=True, separators=(",", ":"))
        with self._lock:
            with open(self._path(doc_id), "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def read_all(self, doc_id: str) -> list[dict]:
        path = self._path(doc_id)
        if not path.exists():
            return []
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def doc_ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.ndjson"))


class AnnotationStore:
    """Annotation log; each state change appends a full snapshot."""

    def __init__(self, directory):
        self._store = _NdjsonStore(directory)

    def put(self, annotation: Annotation) -> None:
        self._store.append(annotation.doc_id, {"annotation": annotation.to_json()})

    def for_doc(self, doc_id: str) -> list[Annotation]:
        latest: dict[str, Annotation] = {}
        for entry in self._store.read_all(doc_id):
            annotation = Annotation.from_json(entry["annotation"])
            latest[annotation.id] = annotation
        return [latest[k] for k in sorted(latest)]

    def doc_ids(self) -> list[str]:
        return self._store.doc_ids()

    def next_id(self, doc_id: str) -> str:
        existing = self.for_doc(doc_id)
        highest = 0
        for annotation in existing:
            m = re.fullmatch(r"ann-(\d+)", annotation.id)
            if m:
                highest = max(highest, int(m.group(1)))
        return f"ann-{highest + 1}"


class ContestStore:
    """Append-only store of analytic verdicts; records are immutable."""

    def __init__(self, directory):
        self._store = _NdjsonStore(directory)

    def append(self, record: ContestRecord) -> str:
        for existing in self.for_doc(record.doc_id):
            if existing.id == record.id:
                raise FeedbackError(f"contest record id {record.id!r} already stored")
        self._store.append(record.doc_id, {"record": record.to_json()})
        return record.id

    def for_doc(self, doc_id: str) -> list[ContestRecord]:
        return [ContestRecord.from_json(e["record"]) for e in self._store.read_all(doc_id)]

    def all_records(self) -> list[ContestRecord]:
        out = []
        for doc_id in self._store.doc_ids():
            out.extend(self.for_doc(doc_id))
        return out

    def next_id(self) -> str:
        highest = 0
        for record in self.all_records():
            m = re.fullmatch(r"contest-(\d+)", record.id)
            if m:
                highest = max(highest, int(m.group(1)))
        return f"contest-{highest + 1}"


def record_contest(record: ContestRecord, store: ContestStore, report_exists=None) -> str:
    """Validate and persist a contest record.

    report_exists, when given, is a predicate on (doc_id, version) used to
    reject records that point at reports never computed.
    """
    if report_exists is not None and not report_exists(record.doc_id, record.version):
        raise FeedbackError(
            f"no report for {record.doc_id!r} version {record.version}; contest refused")
    return store.append(record)


def export_labels(store: ContestStore, doc_id: str | None = None, analytic: str | None = None):
    """Labeled-dataset stream: one canonical JSON line per record, ordered
    by (timestamp, id)."""
    records = store.for_doc(doc_id) if doc_id else store.all_records()
    if analytic:
        records = [r for r in records if r.analytic == analytic]
    records.sort(key=lambda r: (r.timestamp, r.id))
    for record in records:
        yield json.dumps(record.to_json(), sort_keys=True, separators=(",", ":"))


def import_labels(lines, store: ContestStore) -> int:
    count = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        store.append(ContestRecord.from_json(json.loads(line)))
        count += 1
    return count


def feedback_graph(
    chain: VersionChain,
    annotations: list[Annotation],
    reports: list[dict] | None = None,
) -> dict:
    """Node-link structure tying versions, elements, annotations, and
    analytic findings together for the feedback-tracking view."""
    nodes: list[dict] = []
    edges: list[dict] = []
    dangling: list[str] = []
    known_elements: set[str] = set()

    for doc in chain.versions:
        nodes.append({"id": f"version:{doc.version}", "type": "version", "version": doc.version})
    for a, b in zip(chain.versions, chain.versions[1:]):
        edges.append({"from": f"version:{b.version}", "to": f"version:{a.version}", "type": "supersedes"})

    for doc in chain.versions:
        for element in doc.elements:
            if element.id not in known_elements:
                known_elements.add(element.id)
                nodes.append({"id": f"element:{element.id}", "type": "element", "element_id": element.id})
            edges.append({
                "from": f"version:{doc.version}",
                "to": f"element:{element.id}",
                "type": "contains",
            })

    finding_refs: set[str] = set()
    for report in reports or []:
        version = report["version"]
        for kind, entry in report["results"].items():
            payload = entry["payload"]
            items = []
            items.extend(payload.get("findings", []))
            items.extend(payload.get("imbalance_findings", []))
            items.extend(payload.get("line_box_findings", []))
            items.extend(payload.get("loud_area_findings", []))
            for item in items:
                ref = item["ref"]
                node_id = f"finding:{ref}@{version}"
                finding_refs.add(item["ref"])
                nodes.append({
                    "id": node_id, "type": "finding",
                    "analytic": kind, "ref": ref, "version": version,
                })
                ids = item.get("element_ids") or item.get("deviant_element_ids") or []
                for eid in ids:
                    if eid in known_elements:
                        edges.append({"from": node_id, "to": f"element:{eid}", "type": "targets"})
                    else:
                        dangling.append(f"finding {ref} targets unknown element {eid}")

    for annotation in annotations:
        node_id = f"annotation:{annotation.id}"
        nodes.append({
            "id": node_id, "type": "annotation",
            "status": annotation.status, "kind": annotation.kind, "flag": annotation.flag,
        })
        for eid in annotation.target_element_ids:
            if eid in known_elements:
                edges.append({"from": node_id, "to": f"element:{eid}", "type": "targets"})
            else:
                dangling.append(f"annotation {annotation.id} targets unknown element {eid}")
        if annotation.source_item_ref:
            if annotation.source_item_ref in finding_refs:
                edges.append({
                    "from": f"finding:{annotation.source_item_ref}@{annotation.created_version}",
                    "to": node_id,
                    "type": "generated_by",
                })
            else:
                dangling.append(
                    f"annotation {annotation.id} cites unknown finding {annotation.source_item_ref}")
        if annotation.resolved_version is not None:
            edges.append({
                "from": node_id,
                "to": f"version:{annotation.resolved_version}",
                "type": "resolved_at",
            })

    return {"nodes": nodes, "edges": edges, "dangling": dangling}
