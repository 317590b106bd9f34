# SGX Supply Chain Toolkit
# File: merge.py
# Version: v1

"""Line-based diff and three-way merge over in-memory file trees.

Hunks address *base* coordinates with 0-based half-open ranges
``[start, end)``; an empty range is a pure insertion before line ``start``.
Both sides of a merge are diffed against the common base with
:class:`difflib.SequenceMatcher`, and the two hunk lists are then combined:

- hunks on one side only are applied as they are,
- the same hunk on both sides is applied once,
- two different hunks that touch the same base lines form a conflict.

Two hunks "touch" when their line ranges overlap, when an insertion point
lies strictly inside the other hunk's range, or when both are insertions at
the same point. A replacement ending at line ``n`` and an insertion before
line ``n`` do not touch; the replacement is applied first.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from . import schemas
from .errors import DocumentError

__all__ = [
    "FileTree",
    "Hunk",
    "Conflict",
    "MergeOutcome",
    "diff",
    "apply_hunks",
    "hunks_touch",
    "three_way_merge",
]

Lines = Tuple[str, ...]


def _check_path(path: str) -> None:
    if not path or path.startswith("/") or path.endswith("/") or "//" in path:
        raise DocumentError(f"invalid file path {path!r}", field=f"files/{path}")


@dataclass(frozen=True)
class FileTree:
    """Mapping of normalized relative path to its lines."""

    files: Mapping[str, Lines] = field(default_factory=dict)

    def __post_init__(self) -> None:
        normalized: Dict[str, Lines] = {}
        for path in sorted(self.files):
            _check_path(path)
            normalized[path] = tuple(self.files[path])
        object.__setattr__(self, "files", normalized)

    def __contains__(self, path: object) -> bool:
        return path in self.files

    def paths(self) -> List[str]:
        return list(self.files)

    def to_json(self) -> Dict[str, Any]:
        return {"files": {path: list(lines) for path, lines in self.files.items()}}

    @classmethod
    def from_json(cls, document: Dict[str, Any], *, source: Optional[str] = None) -> "FileTree":
        schemas.validate(document, schemas.FILE_TREE, source=source)
        return cls({path: tuple(lines) for path, lines in document["files"].items()})


@dataclass(frozen=True)
class Hunk:
    path: str
    start: int
    end: int
    lines: Lines = ()
    kind: str = "modify"  # modify | add | delete

    @property
    def is_insertion(self) -> bool:
        return self.start == self.end

    def to_json(self) -> Dict[str, Any]:
        return {"path": self.path, "kind": self.kind, "base_range": [self.start, self.end], "lines": list(self.lines)}


def _line_hunks(path: str, base: Sequence[str], derived: Sequence[str]) -> List[Hunk]:
    matcher = difflib.SequenceMatcher(None, list(base), list(derived), autojunk=False)
    return [
        Hunk(path, i1, i2, tuple(derived[j1:j2]))
        for tag, i1, i2, j1, j2 in matcher.get_opcodes()
        if tag != "equal"
    ]


def diff(base: FileTree, derived: FileTree) -> List[Hunk]:
    """Hunks turning ``base`` into ``derived``, sorted by path then position."""
    hunks: List[Hunk] = []
    for path in sorted(set(base.files) | set(derived.files)):
        if path not in derived.files:
            hunks.append(Hunk(path, 0, len(base.files[path]), (), "delete"))
        elif path not in base.files:
            hunks.append(Hunk(path, 0, 0, derived.files[path], "add"))
        else:
            hunks.extend(_line_hunks(path, base.files[path], derived.files[path]))
    return hunks


def _apply_lines(base: Sequence[str], hunks: Iterable[Hunk]) -> Lines:
    out: List[str] = []
    pos = 0
    for hunk in sorted(hunks, key=lambda h: (h.start, h.end)):
        out.extend(base[pos:hunk.start])
        out.extend(hunk.lines)
        pos = hunk.end
    out.extend(base[pos:])
    return tuple(out)


def apply_hunks(base: FileTree, hunks: Iterable[Hunk]) -> FileTree:
    """Apply non-touching hunks to ``base``."""
    by_path: Dict[str, List[Hunk]] = {}
    for hunk in hunks:
        by_path.setdefault(hunk.path, []).append(hunk)

    files: Dict[str, Lines] = dict(base.files)
    for path, group in by_path.items():
        kinds = {h.kind for h in group}
        if "delete" in kinds:
            files.pop(path, None)
        elif "add" in kinds:
            files[path] = _apply_lines((), group)
        else:
            files[path] = _apply_lines(files.get(path, ()), group)
    return FileTree(files)


def hunks_touch(a: Hunk, b: Hunk) -> bool:
    if a.is_insertion and b.is_insertion:
        return a.start == b.start
    return a.start < b.end and b.start < a.end


@dataclass(frozen=True)
class Conflict:
    path: str
    start: int
    end: int
    upstream_lines: Lines
    fork_lines: Lines
    kind: str = "content"  # content | delete_modify

    @property
    def line_range(self) -> Tuple[int, int]:
        """1-based inclusive base lines; ``(n, n-1)`` marks an insertion after line ``n-1``."""
        return (self.start + 1, self.end)

    def to_json(self) -> Dict[str, Any]:
        return {
            "path": self.path,
            "kind": self.kind,
            "line_range": list(self.line_range),
            "upstream_lines": list(self.upstream_lines),
            "fork_lines": list(self.fork_lines),
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "Conflict":
        first, last = doc["line_range"]
        return cls(
            path=doc["path"],
            start=int(first) - 1,
            end=int(last),
            upstream_lines=tuple(doc["upstream_lines"]),
            fork_lines=tuple(doc["fork_lines"]),
            kind=doc.get("kind", "content"),
        )


@dataclass(frozen=True)
class MergeOutcome:
    """Either ``merged_tree`` is set or ``conflicts`` is nonempty, never both."""

    merged_tree: Optional[FileTree] = None
    conflicts: Tuple[Conflict, ...] = ()

    @property
    def clean(self) -> bool:
        return self.merged_tree is not None


def _rebased(sides: List[Tuple[str, Hunk]], members: Iterable[int], side: str, offset: int) -> List[Hunk]:
    return [
        Hunk(h.path, h.start - offset, h.end - offset, h.lines)
        for s, h in (sides[i] for i in members)
        if s == side
    ]


def _merge_lines(path: str, base: Lines, upstream: Lines, fork: Lines) -> Tuple[Lines, List[Conflict]]:
    sides = [("upstream", h) for h in _line_hunks(path, base, upstream)]
    sides += [("fork", h) for h in _line_hunks(path, base, fork)]

    overlap = nx.Graph()
    overlap.add_nodes_from(range(len(sides)))
    for i, (side_i, hunk_i) in enumerate(sides):
        for j in range(i + 1, len(sides)):
            side_j, hunk_j = sides[j]
            if side_i != side_j and hunks_touch(hunk_i, hunk_j):
                overlap.add_edge(i, j)

    kept: List[Hunk] = []
    conflicts: List[Conflict] = []
    for component in nx.connected_components(overlap):
        members = sorted(component)
        hunks = [sides[i][1] for i in members]
        if len(members) == 1 or (len(members) == 2 and hunks[0] == hunks[1]):
            kept.append(hunks[0])
            continue
        start = min(h.start for h in hunks)
        end = max(h.end for h in hunks)
        region = base[start:end]
        upstream_view = _apply_lines(region, _rebased(sides, members, "upstream", start))
        fork_view = _apply_lines(region, _rebased(sides, members, "fork", start))
        conflicts.append(Conflict(path, start, end, upstream_view, fork_view))

    conflicts.sort(key=lambda c: (c.start, c.end))
    return _apply_lines(base, kept), conflicts


def three_way_merge(base: FileTree, upstream: FileTree, fork: FileTree) -> MergeOutcome:
    """Merge ``upstream`` into ``fork`` relative to their common ``base``."""
    merged: Dict[str, Lines] = {}
    conflicts: List[Conflict] = []

    for path in sorted(set(base.files) | set(upstream.files) | set(fork.files)):
        b = base.files.get(path)
        u = upstream.files.get(path)
        f = fork.files.get(path)

        if b is not None and (u is None or f is None):
            # Deleted on at least one side.
            survivor = u if f is None else f
            if survivor is None or survivor == b:
                continue
            conflicts.append(
                Conflict(path, 0, len(b), u if u is not None else (), f if f is not None else (), "delete_modify")
            )
            continue

        if b is None:
            if u is None or f is None:
                merged[path] = u if f is None else f
                continue
            b = ()

        lines, found = _merge_lines(path, b, u, f)
        if found:
            conflicts.extend(found)
        else:
            merged[path] = lines

    if conflicts:
        return MergeOutcome(merged_tree=None, conflicts=tuple(conflicts))
    return MergeOutcome(merged_tree=FileTree(merged))
