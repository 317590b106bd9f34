# SGX Supply Chain Toolkit
# File: store.py
# Version: v1

"""Durable state: atomic snapshots and append-only JSONL logs.

Snapshots are written to a temporary file in the target directory and moved
into place with :func:`os.replace`, so a reader only ever sees the previous
complete snapshot or the new complete one.

Logs are one JSON record per line. The trailing newline is the commit marker:
a final line without it is a torn write and is dropped on replay (and cut off
before the next append).
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock
from typing import Any, Dict, List, Optional

from .errors import StoreError

__all__ = [
    "SCHEMA_VERSION",
    "Snapshot",
    "AppendLog",
    "ReplayResult",
    "write_snapshot",
    "read_snapshot",
    "atomic_write_json",
    "canonical_json",
]

log = logging.getLogger("sgx_supply_chain.store")

SCHEMA_VERSION = 1


def canonical_json(value: Any) -> str:
    """Stable single-line encoding used for every persisted record."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class Snapshot:
    payload: Dict[str, Any]
    version: int = SCHEMA_VERSION
    written_at: int = 0

    def to_json(self) -> Dict[str, Any]:
        return {"version": self.version, "written_at": self.written_at, "payload": self.payload}


def _write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except OSError as exc:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise StoreError(f"failed to write {path}: {exc}", code="io_failure", details={"path": str(path)}) from exc


def atomic_write_json(path: Path | str, document: Any) -> None:
    """Write a human-readable JSON document atomically."""
    _write_text_atomic(Path(path), json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n")


def write_snapshot(payload: Dict[str, Any], path: Path | str, *, written_at: Optional[int] = None) -> Snapshot:
    """Persist ``payload`` as a versioned snapshot.

    On failure the previous file at ``path`` is left untouched and
    :class:`StoreError` (``io_failure``) is raised.
    """
    snap = Snapshot(
        payload=payload,
        version=SCHEMA_VERSION,
        written_at=int(time.time()) if written_at is None else int(written_at),
    )
    atomic_write_json(path, snap.to_json())
    log.debug("snapshot written to %s", path)
    return snap


def read_snapshot(path: Path | str) -> Optional[Snapshot]:
    """Load a snapshot; ``None`` when no snapshot has been written yet."""
    p = Path(path)
    if not p.exists():
        return None
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise StoreError(f"failed to read {p}: {exc}", code="io_failure", details={"path": str(p)}) from exc
    if not isinstance(doc, dict) or "payload" not in doc:
        raise StoreError(f"{p} is not a snapshot document", code="schema_mismatch", details={"path": str(p)})
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise StoreError(
            f"{p} has schema version {version!r}; this toolkit reads version {SCHEMA_VERSION}",
            code="schema_mismatch",
            details={"path": str(p), "found": version, "expected": SCHEMA_VERSION},
        )
    return Snapshot(payload=doc["payload"], version=version, written_at=int(doc.get("written_at", 0)))


@dataclass
class ReplayResult:
    records: List[Dict[str, Any]] = field(default_factory=list)
    truncated: bool = False


class AppendLog:
    """JSONL append-only log with torn-tail detection.

    Thread-safe within a single process; one writer per file.
    """

    def __init__(self, path: Path | str) -> None:
        self.path = Path(path)
        self._lock = Lock()

    def _repair_tail(self) -> None:
        """Cut a torn final record so the next append starts on a fresh line."""
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        if not data or data.endswith(b"\n"):
            return
        cut = data.rfind(b"\n") + 1
        log.warning("dropping torn record at end of %s (%d bytes)", self.path, len(data) - cut)
        with self.path.open("r+b") as fh:
            fh.truncate(cut)

    def append(self, record: Dict[str, Any]) -> None:
        line = canonical_json(record)
        if "\n" in line:  # pragma: no cover - canonical_json never emits raw newlines
            raise StoreError("record does not fit on one line", code="io_failure")
        with self._lock:
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self._repair_tail()
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StoreError(f"failed to append to {self.path}: {exc}", code="io_failure", details={"path": str(self.path)}) from exc

    def extend(self, records: List[Dict[str, Any]]) -> None:
        for record in records:
            self.append(record)

    def replay(self) -> ReplayResult:
        """Return every fully written record in write order."""
        if not self.path.exists():
            return ReplayResult()
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StoreError(f"failed to read {self.path}: {exc}", code="io_failure", details={"path": str(self.path)}) from exc

        result = ReplayResult()
        lines = text.split("\n")
        # The element after the last "\n" is either "" (clean) or a torn record.
        if lines[-1]:
            result.truncated = True
        for lineno, line in enumerate(lines[:-1], start=1):
            if not line.strip():
                continue
            try:
                result.records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise StoreError(
                    f"{self.path}: corrupt record on line {lineno}",
                    code="io_failure",
                    details={"path": str(self.path), "line": lineno},
                ) from exc
        return result
