# SGX Supply Chain Toolkit
# File: repo.py
# Version: v1

"""Simulated upstream/fork repository pair for one forked library.

Commits are content addressed: the id is the SHA-256 of the canonical JSON
encoding of (parent, merge_parent, tree, message, timestamp), so fixtures
reproduce the same ids on every run.

On disk a repository is a directory::

    <state>/repos/<library>/
        commits/<id>.json      full tree snapshot per commit
        HEADS.json             upstream_head / fork_head / merge_base
        escalations.jsonl      conflict escalations, append-only
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .errors import RepoError, StoreError, ToolkitError
from .merge import Conflict, FileTree, three_way_merge
from .store import AppendLog, atomic_write_json, canonical_json

__all__ = [
    "Commit",
    "RepoState",
    "Merged",
    "Escalation",
    "RepoStore",
    "make_commit",
    "init_repo",
    "advance_upstream",
    "commit_fork",
    "attempt_merge",
    "resolve_escalation",
]

log = logging.getLogger("sgx_supply_chain.repo")


def _commit_id(parent: Optional[str], merge_parent: Optional[str], tree: FileTree, message: str, timestamp: int) -> str:
    body = canonical_json(
        {
            "parent": parent,
            "merge_parent": merge_parent,
            "tree": tree.to_json(),
            "message": message,
            "timestamp": timestamp,
        }
    )
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Commit:
    id: str
    parent: Optional[str]
    tree: FileTree
    message: str
    timestamp: int
    merge_parent: Optional[str] = None

    def parents(self) -> Tuple[str, ...]:
        return tuple(p for p in (self.parent, self.merge_parent) if p is not None)

    def to_json(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "parent": self.parent,
            "merge_parent": self.merge_parent,
            "message": self.message,
            "timestamp": self.timestamp,
            "tree": self.tree.to_json(),
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "Commit":
        return cls(
            id=doc["id"],
            parent=doc.get("parent"),
            merge_parent=doc.get("merge_parent"),
            message=doc.get("message", ""),
            timestamp=int(doc["timestamp"]),
            tree=FileTree.from_json(doc["tree"]),
        )


def make_commit(
    parent: Optional[str],
    tree: FileTree,
    message: str,
    timestamp: int,
    *,
    merge_parent: Optional[str] = None,
) -> Commit:
    return Commit(
        id=_commit_id(parent, merge_parent, tree, message, int(timestamp)),
        parent=parent,
        tree=tree,
        message=message,
        timestamp=int(timestamp),
        merge_parent=merge_parent,
    )


def _corrupt(library: str, message: str, **details: Any) -> RepoError:
    return RepoError(f"repository '{library}': {message}", code="corrupt_repo", details={"library": library, **details})


@dataclass
class RepoState:
    """Heads and commit store of one library's fork.

    Single writer; :func:`attempt_merge` and :func:`resolve_escalation` are
    the only operations that move ``fork_head`` and ``merge_base``.
    """

    library: str
    commits: Dict[str, Commit]
    upstream_head: str
    fork_head: str
    merge_base: str

    def commit(self, commit_id: str) -> Commit:
        try:
            return self.commits[commit_id]
        except KeyError:
            raise _corrupt(self.library, f"unknown commit {commit_id}", commit=commit_id) from None

    def tree(self, commit_id: str) -> FileTree:
        return self.commit(commit_id).tree

    def add(self, commit: Commit) -> None:
        self.commits[commit.id] = commit

    def ancestors(self, commit_id: str) -> set[str]:
        """``commit_id`` and every commit reachable through its parents."""
        seen: set[str] = set()
        stack = [commit_id]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(self.commit(current).parents())
        return seen

    def validate(self) -> None:
        for cid, commit in self.commits.items():
            if commit.id != cid:
                raise _corrupt(self.library, f"commit stored under {cid} has id {commit.id}", commit=cid)
            expected = _commit_id(commit.parent, commit.merge_parent, commit.tree, commit.message, commit.timestamp)
            if expected != cid:
                raise _corrupt(self.library, f"commit {cid} does not match its content", commit=cid)
            for parent in commit.parents():
                if parent not in self.commits:
                    raise _corrupt(self.library, f"commit {cid} has unknown parent {parent}", commit=cid)
        for head in (self.upstream_head, self.fork_head, self.merge_base):
            self.commit(head)
        if self.merge_base not in self.ancestors(self.upstream_head):
            raise _corrupt(self.library, "merge_base is not an ancestor of upstream_head")
        if self.merge_base not in self.ancestors(self.fork_head):
            raise _corrupt(self.library, "merge_base is not an ancestor of fork_head")

    def heads_json(self) -> Dict[str, Any]:
        return {
            "library": self.library,
            "upstream_head": self.upstream_head,
            "fork_head": self.fork_head,
            "merge_base": self.merge_base,
        }

    def to_json(self) -> Dict[str, Any]:
        return {**self.heads_json(), "commits": {cid: self.commits[cid].to_json() for cid in sorted(self.commits)}}


@dataclass(frozen=True)
class Merged:
    library: str
    commit_id: str
    merge_base: str
    noop: bool = False

    def to_json(self) -> Dict[str, Any]:
        return {"merged": True, "library": self.library, "fork_head": self.commit_id, "merge_base": self.merge_base, "noop": self.noop}


@dataclass(frozen=True)
class Escalation:
    """A merge the bot could not finish; a maintainer resolves it by hand."""

    library: str
    conflicts: Tuple[Conflict, ...]
    upstream_head: str
    created_at: int

    def to_json(self) -> Dict[str, Any]:
        return {
            "library": self.library,
            "upstream_head": self.upstream_head,
            "created_at": self.created_at,
            "conflicts": [c.to_json() for c in self.conflicts],
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "Escalation":
        return cls(
            library=doc["library"],
            conflicts=tuple(Conflict.from_json(c) for c in doc.get("conflicts", ())),
            upstream_head=doc["upstream_head"],
            created_at=int(doc["created_at"]),
        )


def init_repo(
    library: str,
    base: FileTree,
    upstream: Optional[FileTree] = None,
    fork: Optional[FileTree] = None,
    *,
    timestamp: int = 0,
) -> RepoState:
    """Fork ``library`` at ``base``, then optionally diverge both sides once."""
    root = make_commit(None, base, f"import {library}", timestamp)
    repo = RepoState(library=library, commits={root.id: root}, upstream_head=root.id, fork_head=root.id, merge_base=root.id)
    if upstream is not None and upstream != base:
        advance_upstream(repo, upstream, "upstream change", timestamp)
    if fork is not None and fork != base:
        commit_fork(repo, fork, "port to SGX", timestamp)
    return repo


def advance_upstream(repo: RepoState, tree: FileTree, message: str, now: int) -> str:
    commit = make_commit(repo.upstream_head, tree, message, now)
    repo.add(commit)
    repo.upstream_head = commit.id
    return commit.id


def commit_fork(repo: RepoState, tree: FileTree, message: str, now: int) -> str:
    commit = make_commit(repo.fork_head, tree, message, now)
    repo.add(commit)
    repo.fork_head = commit.id
    return commit.id


def _record_merge(repo: RepoState, tree: FileTree, message: str, now: int) -> Merged:
    commit = make_commit(repo.fork_head, tree, message, now, merge_parent=repo.upstream_head)
    repo.add(commit)
    repo.fork_head = commit.id
    repo.merge_base = repo.upstream_head
    return Merged(library=repo.library, commit_id=commit.id, merge_base=repo.merge_base)


def attempt_merge(repo: RepoState, now: int) -> Union[Merged, Escalation]:
    """Merge the upstream head into the fork.

    A conflict leaves ``repo`` untouched and returns an :class:`Escalation`.
    """
    repo.validate()
    if repo.upstream_head == repo.merge_base:
        return Merged(library=repo.library, commit_id=repo.fork_head, merge_base=repo.merge_base, noop=True)

    outcome = three_way_merge(repo.tree(repo.merge_base), repo.tree(repo.upstream_head), repo.tree(repo.fork_head))
    if not outcome.clean:
        log.info("merge of %s escalated: %d conflict(s)", repo.library, len(outcome.conflicts))
        return Escalation(library=repo.library, conflicts=outcome.conflicts, upstream_head=repo.upstream_head, created_at=int(now))

    assert outcome.merged_tree is not None
    merged = _record_merge(repo, outcome.merged_tree, f"merge upstream {repo.upstream_head[:12]}", now)
    log.info("merged upstream into %s at %s", repo.library, merged.commit_id[:12])
    return merged


def resolve_escalation(repo: RepoState, escalation: Escalation, resolved_tree: FileTree, now: int) -> Merged:
    """Record a maintainer's resolution of ``escalation``."""
    repo.validate()
    if escalation.library != repo.library or escalation.upstream_head != repo.upstream_head:
        raise RepoError(
            f"escalation for {escalation.library}@{escalation.upstream_head[:12]} is stale; "
            f"upstream is now at {repo.upstream_head[:12]}",
            code="stale_escalation",
            details={"library": repo.library, "escalated_at": escalation.upstream_head, "upstream_head": repo.upstream_head},
        )
    return _record_merge(repo, resolved_tree, f"resolve conflicts with upstream {repo.upstream_head[:12]}", now)


class RepoStore:
    """Directory-backed repositories under ``<state>/repos``."""

    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)

    def path_for(self, library: str) -> Path:
        """Directory of ``library``; names that are not a single path component are rejected."""
        if library in {"", ".", ".."} or ".." in library or any(sep in library for sep in ("/", "\\")):
            raise RepoError(
                f"library name '{library}' is not a plain directory name",
                code="invalid_library_name",
                details={"library": library},
            )
        return self.root / library

    def libraries(self) -> List[str]:
        if not self.root.exists():
            return []
        return sorted(p.name for p in self.root.iterdir() if (p / "HEADS.json").exists())

    def save(self, repo: RepoState) -> None:
        directory = self.path_for(repo.library)
        for cid, commit in repo.commits.items():
            target = directory / "commits" / f"{cid}.json"
            if not target.exists():
                atomic_write_json(target, commit.to_json())
        atomic_write_json(directory / "HEADS.json", repo.heads_json())

    def load(self, library: str) -> RepoState:
        directory = self.path_for(library)
        try:
            heads = json.loads((directory / "HEADS.json").read_text(encoding="utf-8"))
            commits: Dict[str, Commit] = {}
            for file in sorted((directory / "commits").glob("*.json")):
                commit = Commit.from_json(json.loads(file.read_text(encoding="utf-8")))
                commits[file.stem] = commit
            repo = RepoState(
                library=heads.get("library", library),
                commits=commits,
                upstream_head=heads["upstream_head"],
                fork_head=heads["fork_head"],
                merge_base=heads["merge_base"],
            )
        except FileNotFoundError as exc:
            raise StoreError(f"no repository for '{library}' at {directory}", code="io_failure", details={"path": str(directory)}) from exc
        except (OSError, ValueError, KeyError, ToolkitError) as exc:
            if isinstance(exc, RepoError):
                raise
            raise _corrupt(library, f"unreadable repository at {directory}: {exc}") from exc
        repo.validate()
        return repo

    def load_all(self) -> Dict[str, RepoState]:
        return {name: self.load(name) for name in self.libraries()}

    def _escalation_log(self, library: str) -> AppendLog:
        return AppendLog(self.path_for(library) / "escalations.jsonl")

    def record_escalation(self, escalation: Escalation) -> None:
        self._escalation_log(escalation.library).append(escalation.to_json())

    def escalations(self, library: str) -> List[Escalation]:
        return [Escalation.from_json(doc) for doc in self._escalation_log(library).replay().records]
