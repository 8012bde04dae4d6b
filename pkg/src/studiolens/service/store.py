"""File-backed persistence for the service.

Documents are stored as canonical JSON under their id and version, reports
are cached content-addressed on (document hash, config hash) and replaced
atomically, so a restart reproduces identical reads. Idempotency keys and
the notification feed are plain append/replace files in the same tree.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
from pathlib import Path

from ..model import DesignDocument, parse_document, serialize_document

_SAFE_NAME = re.compile(r"[^A-Za-z0-9._-]")


def _safe(name: str) -> str:
    return _SAFE_NAME.sub("_", name) or "_"


class ConflictError(Exception):
    pass


class NotFoundError(Exception):
    pass


class DocumentStore:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def lock_for(self, doc_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(doc_id, threading.Lock())

    def _doc_dir(self, doc_id: str) -> Path:
        return self.directory / _safe(doc_id)

    def _path(self, doc_id: str, version: int) -> Path:
        return self._doc_dir(doc_id) / f"{version}.json"

    def exists(self, doc_id: str, version: int) -> bool:
        return self._path(doc_id, version).exists()

    def put(self, doc: DesignDocument) -> None:
        with self.lock_for(doc.doc_id):
            path = self._path(doc.doc_id, doc.version)
            if path.exists():
                raise ConflictError(f"{doc.doc_id} version {doc.version} already stored")
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(serialize_document(doc), encoding="utf-8")
            os.replace(tmp, path)

    def get(self, doc_id: str, version: int) -> DesignDocument:
        path = self._path(doc_id, version)
        if not path.exists():
            raise NotFoundError(f"unknown document {doc_id!r} version {version}")
        return parse_document(path.read_text(encoding="utf-8"))

    def document_bytes(self, doc_id: str, version: int) -> bytes:
        path = self._path(doc_id, version)
        if not path.exists():
            raise NotFoundError(f"unknown document {doc_id!r} version {version}")
        return path.read_bytes()

    def content_hash(self, doc_id: str, version: int) -> str:
        return hashlib.sha256(self.document_bytes(doc_id, version)).hexdigest()[:16]

    def versions(self, doc_id: str) -> list[int]:
        doc_dir = self._doc_dir(doc_id)
        if not doc_dir.exists():
            return []
        return sorted(int(p.stem) for p in doc_dir.glob("*.json"))

    def doc_ids(self) -> list[str]:
        # Directory names are sanitized; recover true ids from the files.
        ids = set()
        for doc_dir in self.directory.iterdir():
            if not doc_dir.is_dir():
                continue
            for path in doc_dir.glob("*.json"):
                try:
                    ids.add(json.loads(path.read_text(encoding="utf-8"))["doc_id"])
                    break
                except (json.JSONDecodeError, KeyError):
                    continue
        return sorted(ids)

    def chain(self, doc_id: str) -> list[DesignDocument]:
        return [self.get(doc_id, v) for v in self.versions(doc_id)]


class ReportCache:
    """Content-addressed report cache: (document hash, config hash) -> bytes."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, doc_hash: str, config_hash: str) -> Path:
        return self.directory / f"{doc_hash}-{config_hash}.json"

    def get(self, doc_hash: str, config_hash: str) -> bytes | None:
        path = self._path(doc_hash, config_hash)
        if path.exists():
            return path.read_bytes()
        return None

    def put(self, doc_hash: str, config_hash: str, payload: bytes) -> None:
        path = self._path(doc_hash, config_hash)
        with self._lock:
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(payload)
            os.replace(tmp, path)


class IdempotencyStore:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:32]
        return self.directory / f"{digest}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return None

    def put(self, key: str, status_code: int, body: str, media_type: str) -> None:
        with self._lock:
            tmp = self._path(key).with_suffix(".tmp")
            tmp.write_text(json.dumps({
                "status_code": status_code,
                "body": body,
                "media_type": media_type,
            }), encoding="utf-8")
            os.replace(tmp, self._path(key))


class NotificationFeed:
    """Pollable append-only event feed with monotonic sequence numbers."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, event: dict) -> int:
        with self._lock:
            seq = self._count() + 1
            entry = dict(event, seq=seq)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True, separators=(",", ":")) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            return seq

    def _count(self) -> int:
        if not self.path.exists():
            return 0
        with open(self.path, encoding="utf-8") as fh:
            return sum(1 for line in fh if line.strip())

    def since(self, seq: int) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    event = json.loads(line)
                    if event["seq"] > seq:
                        out.append(event)
        return out
