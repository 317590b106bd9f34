# SGX Supply Chain Toolkit
# File: scheduler.py
# Version: v1

"""Merge scheduler: pull-request cache, trigger rules and review routing.

Upstream patches are collected per library by :func:`enqueue_patch`. Each
:func:`scheduler_step` evaluates every cache and, for a library whose cache
triggers, either

- hands the whole batch to the mandatory-review queue (libraries listed in
  ``SchedulerConfig.manual_review``), or
- calls :func:`repo.attempt_merge`; a clean merge empties the cache, a
  conflict keeps the patches cached and records a pending escalation.

Triggers, in priority order (the order only changes the logged reason):

``keyword``
    some cached message contains a configured keyword as a whole word,
    case-insensitively ("fixed" does not match "fix").
``capacity``
    the cache holds at least ``capacity`` patches.
``age``
    the cache is nonempty and ``now - last_merge >= max_age``; without a
    previous merge the earliest cached patch timestamp is the reference.

Operations never mutate the state they are given; they return a new
:class:`SchedulerState`. Repository objects passed in ``repos`` are the one
exception: a clean merge advances that repository's fork head.
"""

from __future__ import annotations

import copy
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Pattern, Tuple

from .cache import Patch, PatchCache
from .config import SchedulerConfig
from .errors import SchedulerError
from .policy import Route, permits
from .repo import Escalation, Merged, RepoState, attempt_merge
from .store import AppendLog, read_snapshot, write_snapshot

__all__ = [
    "Patch",
    "Trigger",
    "Outcome",
    "MergeDecision",
    "ReviewEntry",
    "PendingEscalation",
    "StepAction",
    "SchedulerState",
    "SchedulerStore",
    "enqueue_patch",
    "ingest_patches",
    "evaluate_triggers",
    "scheduler_step",
    "approve_review",
    "complete_escalation",
]

log = logging.getLogger("sgx_supply_chain.scheduler")


class Trigger(str, Enum):
    KEYWORD = "keyword"
    CAPACITY = "capacity"
    AGE = "age"


class Outcome(str, Enum):
    MERGED = "merged"
    ESCALATED = "escalated"
    QUEUED = "queued_for_review"
    RESOLVED = "resolved"


@dataclass(frozen=True)
class MergeDecision:
    library: str
    trigger: Trigger
    patch_ids: Tuple[str, ...]
    routed_to: Route
    timestamp: int
    outcome: Outcome
    approver: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.patch_ids:
            raise ValueError("a merge decision always covers at least one patch")

    def to_json(self) -> Dict[str, Any]:
        return {
            "library": self.library,
            "trigger": self.trigger.value,
            "patch_ids": list(self.patch_ids),
            "routed_to": self.routed_to.value,
            "outcome": self.outcome.value,
            "approver": self.approver,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "MergeDecision":
        return cls(
            library=doc["library"],
            trigger=Trigger(doc["trigger"]),
            patch_ids=tuple(doc["patch_ids"]),
            routed_to=Route(doc["routed_to"]),
            timestamp=int(doc["timestamp"]),
            outcome=Outcome(doc["outcome"]),
            approver=doc.get("approver"),
        )


@dataclass(frozen=True)
class ReviewEntry:
    library: str
    patches: Tuple[Patch, ...]
    reason: str
    trigger: Trigger
    queued_at: int

    @property
    def patch_ids(self) -> Tuple[str, ...]:
        return tuple(p.id for p in self.patches)

    def to_json(self) -> Dict[str, Any]:
        return {
            "library": self.library,
            "patches": [p.to_json() for p in self.patches],
            "reason": self.reason,
            "trigger": self.trigger.value,
            "queued_at": self.queued_at,
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "ReviewEntry":
        return cls(
            library=doc["library"],
            patches=tuple(Patch.from_json(p) for p in doc["patches"]),
            reason=doc.get("reason", ""),
            trigger=Trigger(doc["trigger"]),
            queued_at=int(doc["queued_at"]),
        )


@dataclass(frozen=True)
class PendingEscalation:
    """Conflict waiting for a maintainer, with the patches it holds back."""

    escalation: Escalation
    patch_ids: Tuple[str, ...]
    trigger: Trigger
    routed_to: Route
    approver: Optional[str] = None

    @property
    def library(self) -> str:
        return self.escalation.library

    def to_json(self) -> Dict[str, Any]:
        return {
            "escalation": self.escalation.to_json(),
            "patch_ids": list(self.patch_ids),
            "trigger": self.trigger.value,
            "routed_to": self.routed_to.value,
            "approver": self.approver,
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "PendingEscalation":
        return cls(
            escalation=Escalation.from_json(doc["escalation"]),
            patch_ids=tuple(doc["patch_ids"]),
            trigger=Trigger(doc["trigger"]),
            routed_to=Route(doc["routed_to"]),
            approver=doc.get("approver"),
        )


@dataclass(frozen=True)
class StepAction:
    """Something a step or approval did that the operator should see."""

    kind: str  # merged | escalated | queued_for_review
    library: str
    decision: MergeDecision
    detail: Dict[str, Any] = field(default_factory=dict)
    new: bool = True

    def to_json(self) -> Dict[str, Any]:
        return {"action": self.kind, "library": self.library, "new": self.new, "decision": self.decision.to_json(), **self.detail}


@dataclass
class SchedulerState:
    caches: Dict[str, PatchCache] = field(default_factory=dict)
    last_merge: Dict[str, int] = field(default_factory=dict)
    review_queue: List[ReviewEntry] = field(default_factory=list)
    escalations: Dict[str, PendingEscalation] = field(default_factory=dict)
    decision_log: List[MergeDecision] = field(default_factory=list)

    def copy(self) -> "SchedulerState":
        return copy.deepcopy(self)

    def to_json(self) -> Dict[str, Any]:
        """Snapshot payload. The decision log is persisted separately."""
        return {
            "caches": {lib: self.caches[lib].to_json() for lib in sorted(self.caches)},
            "last_merge": {lib: self.last_merge[lib] for lib in sorted(self.last_merge)},
            "review_queue": [e.to_json() for e in self.review_queue],
            "escalations": {lib: self.escalations[lib].to_json() for lib in sorted(self.escalations)},
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any], decisions: Iterable[MergeDecision] = ()) -> "SchedulerState":
        return cls(
            caches={lib: PatchCache.from_json(c) for lib, c in doc.get("caches", {}).items()},
            last_merge={lib: int(ts) for lib, ts in doc.get("last_merge", {}).items()},
            review_queue=[ReviewEntry.from_json(e) for e in doc.get("review_queue", ())],
            escalations={lib: PendingEscalation.from_json(e) for lib, e in doc.get("escalations", {}).items()},
            decision_log=list(decisions),
        )


# ---------------------------------------------------------------------------
# Ingestion and triggers
# ---------------------------------------------------------------------------


def _enqueue(state: SchedulerState, config: SchedulerConfig, patch: Patch) -> None:
    cache = state.caches.get(patch.library)
    if cache is None:
        cache = PatchCache(library=patch.library, capacity=config.default_capacity)
        state.caches[patch.library] = cache
    cache.add(patch)


def enqueue_patch(state: SchedulerState, config: SchedulerConfig, patch: Patch) -> SchedulerState:
    """Append ``patch`` to its library's cache. Triggers are not evaluated."""
    new = state.copy()
    _enqueue(new, config, patch)
    return new


def ingest_patches(state: SchedulerState, config: SchedulerConfig, patches: Iterable[Patch]) -> SchedulerState:
    """Enqueue a feed in order; the first duplicate aborts the whole batch."""
    new = state.copy()
    for patch in patches:
        _enqueue(new, config, patch)
    return new


_KEYWORD_PATTERNS: Dict[Tuple[str, ...], Optional[Pattern[str]]] = {}


def _keyword_pattern(keywords: Iterable[str]) -> Optional[Pattern[str]]:
    words = tuple(sorted(keywords))
    if words not in _KEYWORD_PATTERNS:
        _KEYWORD_PATTERNS[words] = (
            re.compile(r"\b(?:" + "|".join(re.escape(w) for w in words) + r")\b", re.IGNORECASE) if words else None
        )
    return _KEYWORD_PATTERNS[words]


def evaluate_triggers(
    cache: PatchCache,
    config: SchedulerConfig,
    now: int,
    last_merge: Optional[int] = None,
) -> Optional[Trigger]:
    if not cache.entries:
        return None
    pattern = _keyword_pattern(config.keywords)
    if pattern is not None and any(pattern.search(p.message) for p in cache.entries):
        return Trigger.KEYWORD
    if len(cache.entries) >= cache.capacity:
        return Trigger.CAPACITY
    reference = last_merge if last_merge is not None else cache.earliest_timestamp()
    if reference is not None and now - reference >= config.max_age:
        return Trigger.AGE
    return None


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------


def _check_clock(state: SchedulerState, now: int) -> None:
    if state.decision_log and now < state.decision_log[-1].timestamp:
        last = state.decision_log[-1].timestamp
        raise SchedulerError(
            f"now={now} is earlier than the last decision at {last}",
            code="clock_regression",
            details={"now": now, "last_decision": last},
        )


def _missing_repo(library: str) -> SchedulerError:
    return SchedulerError(f"no repository registered for '{library}'", code="missing_repo", details={"library": library})


def _decide(state: SchedulerState, decision: MergeDecision) -> MergeDecision:
    state.decision_log.append(decision)
    log.info(json.dumps({"event": "merge_decision", **decision.to_json()}, sort_keys=True))
    return decision


def _escalate(
    state: SchedulerState,
    result: Escalation,
    patch_ids: Tuple[str, ...],
    trigger: Trigger,
    route: Route,
    approver: Optional[str],
) -> bool:
    """Record ``result`` as the library's pending escalation; True when it is new."""
    previous = state.escalations.get(result.library)
    fresh = previous is None or previous.escalation.upstream_head != result.upstream_head
    held = list(previous.patch_ids) if previous is not None else []
    held += [pid for pid in patch_ids if pid not in held]
    state.escalations[result.library] = PendingEscalation(
        escalation=result if fresh or previous is None else previous.escalation,
        patch_ids=tuple(held),
        trigger=trigger,
        routed_to=route,
        approver=approver,
    )
    return fresh


def scheduler_step(
    state: SchedulerState,
    config: SchedulerConfig,
    repos: Mapping[str, RepoState],
    now: int,
) -> Tuple[SchedulerState, List[StepAction]]:
    """Evaluate every cache once, in library-name order."""
    _check_clock(state, now)
    new = state.copy()

    triggered = []
    for library in sorted(new.caches):
        trigger = evaluate_triggers(new.caches[library], config, now, new.last_merge.get(library))
        if trigger is None:
            continue
        policy = permits(library, manual_review=config.manual_review)
        if policy.auto_merge_allowed and library not in repos:
            raise _missing_repo(library)
        triggered.append((library, trigger, policy))

    actions: List[StepAction] = []
    for library, trigger, policy in triggered:
        cache = new.caches[library]
        if not policy.auto_merge_allowed:
            patches = cache.drain()
            new.review_queue.append(ReviewEntry(library, patches, policy.reason, trigger, now))
            decision = _decide(
                new, MergeDecision(library, trigger, tuple(p.id for p in patches), Route.MANUAL_REVIEW, now, Outcome.QUEUED)
            )
            actions.append(StepAction("queued_for_review", library, decision, {"reason": policy.reason}))
            continue

        patch_ids = cache.ids()
        result = attempt_merge(repos[library], now)
        if isinstance(result, Merged):
            cache.drain()
            new.last_merge[library] = now
            new.escalations.pop(library, None)
            decision = _decide(new, MergeDecision(library, trigger, patch_ids, Route.AUTO_MERGE, now, Outcome.MERGED))
            actions.append(StepAction("merged", library, decision, {"merge": result.to_json()}))
        else:
            fresh = _escalate(new, result, patch_ids, trigger, Route.AUTO_MERGE, None)
            decision = _decide(new, MergeDecision(library, trigger, patch_ids, Route.AUTO_MERGE, now, Outcome.ESCALATED))
            actions.append(StepAction("escalated", library, decision, {"escalation": result.to_json()}, new=fresh))
    return new, actions


def approve_review(
    state: SchedulerState,
    library: str,
    approver: str,
    now: int,
    repos: Mapping[str, RepoState],
) -> Tuple[SchedulerState, StepAction]:
    """Release the oldest review entry for ``library`` into the merge path."""
    _check_clock(state, now)
    position = next((i for i, e in enumerate(state.review_queue) if e.library == library), None)
    if position is None:
        raise SchedulerError(f"no pending review for '{library}'", code="nothing_pending", details={"library": library})
    if library not in repos:
        raise _missing_repo(library)

    new = state.copy()
    entry = new.review_queue.pop(position)
    result = attempt_merge(repos[library], now)
    if isinstance(result, Merged):
        new.last_merge[library] = now
        new.escalations.pop(library, None)
        decision = _decide(
            new, MergeDecision(library, entry.trigger, entry.patch_ids, Route.MANUAL_REVIEW, now, Outcome.MERGED, approver)
        )
        return new, StepAction("merged", library, decision, {"merge": result.to_json()})

    fresh = _escalate(new, result, entry.patch_ids, entry.trigger, Route.MANUAL_REVIEW, approver)
    decision = _decide(
        new, MergeDecision(library, entry.trigger, entry.patch_ids, Route.MANUAL_REVIEW, now, Outcome.ESCALATED, approver)
    )
    return new, StepAction("escalated", library, decision, {"escalation": result.to_json()}, new=fresh)


def complete_escalation(
    state: SchedulerState,
    library: str,
    resolver: str,
    now: int,
    merged: Merged,
) -> Tuple[SchedulerState, MergeDecision]:
    """Close the pending escalation after :func:`repo.resolve_escalation` succeeded."""
    _check_clock(state, now)
    pending = state.escalations.get(library)
    if pending is None:
        raise SchedulerError(f"no pending escalation for '{library}'", code="nothing_pending", details={"library": library})

    new = state.copy()
    del new.escalations[library]
    cache = new.caches.get(library)
    if cache is not None:
        cache.discard(pending.patch_ids)
    new.last_merge[library] = now
    decision = _decide(
        new,
        MergeDecision(library, pending.trigger, pending.patch_ids, pending.routed_to, now, Outcome.RESOLVED, resolver),
    )
    log.debug("escalation for %s closed at fork head %s", library, merged.commit_id[:12])
    return new, decision


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


class SchedulerStore:
    """``scheduler_state.json`` snapshot plus the append-only ``decisions.jsonl``."""

    def __init__(self, state_dir: Path | str) -> None:
        self.state_dir = Path(state_dir)
        self.snapshot_path = self.state_dir / "scheduler_state.json"
        self.decisions = AppendLog(self.state_dir / "decisions.jsonl")

    def load(self) -> SchedulerState:
        replay = self.decisions.replay()
        if replay.truncated:
            log.warning("decisions.jsonl ended in a torn record; it was ignored")
        decisions = [MergeDecision.from_json(d) for d in replay.records]
        snap = read_snapshot(self.snapshot_path)
        if snap is None:
            return SchedulerState(decision_log=decisions)
        return SchedulerState.from_json(snap.payload, decisions)

    def save(self, state: SchedulerState, *, now: Optional[int] = None) -> None:
        logged = len(self.decisions.replay().records)
        self.decisions.extend([d.to_json() for d in state.decision_log[logged:]])
        write_snapshot(state.to_json(), self.snapshot_path, written_at=now)
