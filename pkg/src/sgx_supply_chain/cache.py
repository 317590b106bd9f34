# SGX Supply Chain Toolkit
# File: cache.py
# Version: v1

"""Per-library pull-request cache.

Upstream patches wait here until the scheduler decides to merge them.
Entries keep arrival order; the cache never evicts on its own. Reaching
``capacity`` is a merge trigger, not an eviction rule, so a cache may hold
exactly ``capacity`` entries between an enqueue and the next scheduler step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .errors import SchedulerError

__all__ = ["Patch", "PatchCache", "DEFAULT_CAPACITY"]

DEFAULT_CAPACITY = 10


@dataclass(frozen=True)
class Patch:
    id: str
    library: str
    message: str
    timestamp: int
    upstream_commit: Optional[str] = None

    def __post_init__(self) -> None:
        if self.timestamp < 0:
            raise ValueError(f"patch {self.id}: timestamp must be >= 0")

    def to_json(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "library": self.library,
            "message": self.message,
            "timestamp": self.timestamp,
            "upstream_commit": self.upstream_commit,
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "Patch":
        return cls(
            id=doc["id"],
            library=doc["library"],
            message=doc.get("message", ""),
            timestamp=int(doc["timestamp"]),
            upstream_commit=doc.get("upstream_commit"),
        )


@dataclass
class PatchCache:
    library: str
    capacity: int = DEFAULT_CAPACITY
    entries: List[Patch] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def ids(self) -> Tuple[str, ...]:
        return tuple(p.id for p in self.entries)

    def add(self, patch: Patch) -> None:
        if patch.library != self.library:
            raise ValueError(f"patch {patch.id} belongs to {patch.library}, not {self.library}")
        if patch.id in self.ids():
            raise SchedulerError(
                f"patch '{patch.id}' is already cached for {self.library}",
                code="duplicate_patch_id",
                details={"library": self.library, "id": patch.id},
            )
        self.entries.append(patch)

    def drain(self) -> Tuple[Patch, ...]:
        """Remove and return every entry in arrival order."""
        drained = tuple(self.entries)
        self.entries.clear()
        return drained

    def discard(self, patch_ids: Tuple[str, ...]) -> None:
        gone = set(patch_ids)
        self.entries = [p for p in self.entries if p.id not in gone]

    def earliest_timestamp(self) -> Optional[int]:
        if not self.entries:
            return None
        return min(p.timestamp for p in self.entries)

    def stats(self) -> Dict[str, Any]:
        return {
            "library": self.library,
            "size": len(self.entries),
            "capacity": self.capacity,
            "full": self.full,
            "earliest_timestamp": self.earliest_timestamp(),
        }

    def to_json(self) -> Dict[str, Any]:
        return {"library": self.library, "capacity": self.capacity, "entries": [p.to_json() for p in self.entries]}

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "PatchCache":
        return cls(
            library=doc["library"],
            capacity=int(doc.get("capacity", DEFAULT_CAPACITY)),
            entries=[Patch.from_json(p) for p in doc.get("entries", ())],
        )
