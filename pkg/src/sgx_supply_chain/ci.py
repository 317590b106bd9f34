# SGX Supply Chain Toolkit
# File: ci.py
# Version: v1

"""CI orchestration: pipeline matrix, retries, failure triage and history.

Every library is built on each combination of package manager, OS version
and build type. Failures fall into three categories:

- ``transient_network``: retried up to ``retry_budget`` times,
- ``external_dependency_breakage``: an outside dependency changed under us,
- ``deterministic``: everything else, including unrecognised raw kinds.

A daily sweep that sees a large share of libraries fail at once reports a
:class:`MassFailureEvent`; such a day is almost always an external breakage,
so its deterministic failures are relabelled as external.

Weekly history counts one *attempt* per library CI invocation (all pipelines
of one library at one timestamp), plus one per merge attempt.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

from .errors import CiError, ToolkitError
from .runners import CiRunner, RawOutcome
from .store import AppendLog

__all__ = [
    "BuildMatrix",
    "PipelineConfig",
    "FailureCategory",
    "CiOutcome",
    "CiRecord",
    "MassFailureEvent",
    "SweepResult",
    "Attempt",
    "InvocationAttempt",
    "MergeAttempt",
    "WeeklyReport",
    "CiHistory",
    "WEEK_SECONDS",
    "expand_matrix",
    "classify",
    "run_ci",
    "daily_sweep",
    "summarize_invocations",
    "merge_attempts",
    "week_of",
    "weekly_aggregate",
    "weekly_csv",
    "failure_breakdown",
    "recovery_times",
]

log = logging.getLogger("sgx_supply_chain.ci")

WEEK_SECONDS = 7 * 86400
AXES = ("package_manager", "os_version", "build_type")


@dataclass(frozen=True)
class BuildMatrix:
    package_managers: Tuple[str, ...]
    os_versions: Tuple[str, ...]
    build_types: Tuple[str, ...]

    def axes(self) -> List[Tuple[str, Tuple[str, ...]]]:
        return list(zip(AXES, (self.package_managers, self.os_versions, self.build_types)))


@dataclass(frozen=True)
class PipelineConfig:
    package_manager: str
    os_version: str
    build_type: str

    @property
    def label(self) -> str:
        return f"{self.package_manager}/{self.os_version}/{self.build_type}"

    def value(self, axis: str) -> str:
        return getattr(self, axis)

    def to_json(self) -> Dict[str, str]:
        return {"package_manager": self.package_manager, "os_version": self.os_version, "build_type": self.build_type}

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "PipelineConfig":
        return cls(doc["package_manager"], doc["os_version"], doc["build_type"])


def expand_matrix(matrix: BuildMatrix) -> List[PipelineConfig]:
    """Cross product in declared axis and value order."""
    for axis, values in matrix.axes():
        if not values:
            raise CiError(f"matrix axis '{axis}' is empty", code="empty_axis", details={"axis": axis})
        dupes = sorted({v for v in values if values.count(v) > 1})
        if dupes:
            raise CiError(
                f"matrix axis '{axis}' repeats {', '.join(dupes)}",
                code="duplicate_axis_value",
                details={"axis": axis, "values": dupes},
            )
    return [PipelineConfig(*combo) for combo in itertools.product(matrix.package_managers, matrix.os_versions, matrix.build_types)]


class FailureCategory(str, Enum):
    TRANSIENT_NETWORK = "transient_network"
    DETERMINISTIC = "deterministic"
    EXTERNAL_DEPENDENCY_BREAKAGE = "external_dependency_breakage"


class CiOutcome(str, Enum):
    PASS = "pass"
    FAIL = "fail"


_RAW_KINDS = {
    "network": FailureCategory.TRANSIENT_NETWORK,
    "transient_network": FailureCategory.TRANSIENT_NETWORK,
    "external": FailureCategory.EXTERNAL_DEPENDENCY_BREAKAGE,
    "external_dependency_breakage": FailureCategory.EXTERNAL_DEPENDENCY_BREAKAGE,
}


def classify(raw: RawOutcome) -> Optional[FailureCategory]:
    if raw.passed:
        return None
    return _RAW_KINDS.get((raw.kind or "").lower(), FailureCategory.DETERMINISTIC)


@dataclass(frozen=True)
class CiRecord:
    library: str
    config: PipelineConfig
    when: int
    outcome: CiOutcome
    category: Optional[FailureCategory] = None
    attempts: int = 1

    def __post_init__(self) -> None:
        if (self.outcome is CiOutcome.FAIL) != (self.category is not None):
            raise ValueError("category is set exactly when the outcome is fail")

    @property
    def failed(self) -> bool:
        return self.outcome is CiOutcome.FAIL

    def to_json(self) -> Dict[str, Any]:
        return {
            "library": self.library,
            "config": self.config.to_json(),
            "when": self.when,
            "outcome": self.outcome.value,
            "category": self.category.value if self.category else None,
            "attempts": self.attempts,
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "CiRecord":
        category = doc.get("category")
        return cls(
            library=doc["library"],
            config=PipelineConfig.from_json(doc["config"]),
            when=int(doc["when"]),
            outcome=CiOutcome(doc["outcome"]),
            category=FailureCategory(category) if category else None,
            attempts=int(doc.get("attempts", 1)),
        )


def _run_one(library: str, config: PipelineConfig, runner: CiRunner, retry_budget: int, now: int) -> CiRecord:
    attempts = 0
    while True:
        attempts += 1
        try:
            raw = runner.run(library, config)
        except ToolkitError:
            raise
        except Exception as exc:
            raise CiError(
                f"runner failed on {library} [{config.label}]: {exc}",
                code="runner_unavailable",
                details={"library": library, "pipeline": config.label},
            ) from exc
        category = classify(raw)
        if category is None:
            return CiRecord(library, config, now, CiOutcome.PASS, None, attempts)
        if category is FailureCategory.TRANSIENT_NETWORK and attempts <= retry_budget:
            log.debug("retrying %s [%s] after network failure (%d/%d)", library, config.label, attempts, retry_budget)
            continue
        return CiRecord(library, config, now, CiOutcome.FAIL, category, attempts)


def run_ci(
    library: str,
    configs: Sequence[PipelineConfig],
    runner: Optional[CiRunner],
    retry_budget: int,
    now: int,
    *,
    max_parallel: int = 1,
) -> List[CiRecord]:
    """One record per config, in ``configs`` order whatever the execution order."""
    if runner is None:
        raise CiError("no CI runner available", code="runner_unavailable")
    if retry_budget < 0:
        raise ValueError("retry_budget must be >= 0")
    if not configs:
        return []
    workers = max(1, min(max_parallel, len(configs)))
    if workers == 1:
        return [_run_one(library, c, runner, retry_budget, now) for c in configs]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="sgxsc-ci") as pool:
        futures = [pool.submit(_run_one, library, c, runner, retry_budget, now) for c in configs]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class MassFailureEvent:
    count: int
    total: int
    suspected_external: bool = True
    suspected_axis: Optional[Tuple[str, str]] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "total": self.total,
            "suspected_external": self.suspected_external,
            "suspected_axis": list(self.suspected_axis) if self.suspected_axis else None,
        }


@dataclass(frozen=True)
class SweepResult:
    records: List[CiRecord]
    event: Optional[MassFailureEvent] = None

    @property
    def failing_libraries(self) -> List[str]:
        return sorted({r.library for r in self.records if r.failed})


def _shared_axis(failures: Sequence[CiRecord], configs: Sequence[PipelineConfig]) -> Optional[Tuple[str, str]]:
    for axis in AXES:
        if len({c.value(axis) for c in configs}) < 2:
            continue
        values = {r.config.value(axis) for r in failures}
        if len(values) == 1:
            return axis, values.pop()
    return None


def daily_sweep(
    libraries: Iterable[str],
    configs: Sequence[PipelineConfig],
    runner: Optional[CiRunner],
    now: int,
    mass_failure_threshold: float,
    *,
    retry_budget: int = 2,
    max_parallel: int = 1,
) -> SweepResult:
    if not 0 < mass_failure_threshold <= 1:
        raise CiError(
            f"mass_failure_threshold must be in (0, 1], got {mass_failure_threshold}",
            code="invalid_threshold",
            details={"threshold": mass_failure_threshold},
        )
    names = sorted(set(libraries))
    records: List[CiRecord] = []
    for library in names:
        records.extend(run_ci(library, configs, runner, retry_budget, now, max_parallel=max_parallel))

    failing = {r.library for r in records if r.failed}
    if not names or Fraction(len(failing), len(names)) < Fraction(str(mass_failure_threshold)):
        return SweepResult(records=records)

    failures = [r for r in records if r.failed]
    event = MassFailureEvent(count=len(failing), total=len(names), suspected_axis=_shared_axis(failures, configs))
    records = [
        replace(r, category=FailureCategory.EXTERNAL_DEPENDENCY_BREAKAGE)
        if r.category is FailureCategory.DETERMINISTIC
        else r
        for r in records
    ]
    log.warning(json.dumps({"event": "mass_failure", "when": now, **event.to_json()}, sort_keys=True))
    return SweepResult(records=records, event=event)


# ---------------------------------------------------------------------------
# History
# ---------------------------------------------------------------------------


class Attempt(Protocol):
    @property
    def when(self) -> int: ...

    @property
    def failed(self) -> bool: ...


@dataclass(frozen=True)
class InvocationAttempt:
    """One library's CI run at one timestamp, failed if any pipeline failed."""

    library: str
    when: int
    failed: bool


@dataclass(frozen=True)
class MergeAttempt:
    library: str
    when: int
    failed: bool


def merge_attempts(decisions: Iterable[Any]) -> List[MergeAttempt]:
    """Automatic merge attempts from a decision log; escalations count as failures."""
    out = []
    for d in decisions:
        outcome = getattr(d.outcome, "value", d.outcome)
        if outcome in ("merged", "escalated"):
            out.append(MergeAttempt(d.library, d.timestamp, outcome == "escalated"))
    return out


def summarize_invocations(records: Iterable[CiRecord]) -> List[InvocationAttempt]:
    grouped: Dict[Tuple[str, int], bool] = {}
    for r in records:
        key = (r.library, r.when)
        grouped[key] = grouped.get(key, False) or r.failed
    return [InvocationAttempt(lib, when, failed) for (lib, when), failed in sorted(grouped.items())]


@dataclass(frozen=True)
class WeeklyReport:
    week_index: int
    total_attempts: int
    failed_attempts: int

    @property
    def failure_rate(self) -> Fraction:
        if self.total_attempts == 0:
            return Fraction(0)
        return Fraction(self.failed_attempts, self.total_attempts)

    def to_json(self) -> Dict[str, Any]:
        return {
            "week": self.week_index,
            "total": self.total_attempts,
            "failed": self.failed_attempts,
            "rate": round(float(self.failure_rate), 4),
        }


def week_of(when: int, epoch: int) -> int:
    """1-based week index of ``when``; week 1 starts at ``epoch``."""
    return (when - epoch) // WEEK_SECONDS + 1


def weekly_aggregate(history: Iterable[Attempt], epoch: int, *, weeks: Optional[int] = None) -> List[WeeklyReport]:
    """Bucket attempts into 7-day windows; empty weeks in range are reported too."""
    totals: Dict[int, int] = {}
    failed: Dict[int, int] = {}
    for attempt in history:
        week = week_of(attempt.when, epoch)
        totals[week] = totals.get(week, 0) + 1
        if attempt.failed:
            failed[week] = failed.get(week, 0) + 1
    if not totals and not weeks:
        return []
    first = min([1, *totals])
    last = max([weeks or 0, *totals])
    return [WeeklyReport(w, totals.get(w, 0), failed.get(w, 0)) for w in range(first, last + 1)]


def weekly_csv(reports: Iterable[WeeklyReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["week", "total", "failed", "rate"])
    for r in reports:
        writer.writerow([r.week_index, r.total_attempts, r.failed_attempts, f"{float(r.failure_rate):.4f}"])
    return buf.getvalue()


def failure_breakdown(history: Iterable[CiRecord]) -> Dict[str, Any]:
    counts = {c.value: 0 for c in FailureCategory}
    for r in history:
        if r.category is not None:
            counts[r.category.value] += 1
    total = sum(counts.values())
    share = Fraction(counts[FailureCategory.TRANSIENT_NETWORK.value], total) if total else Fraction(0)
    return {"failures": total, "by_category": counts, "transient_share": round(float(share), 4)}


def recovery_times(history: Iterable[CiRecord], *, window: int = 3 * 86400) -> Dict[str, Any]:
    """Seconds from the first failing invocation of an outage to the next passing one.

    Outages still open at the end of the history are reported as unresolved.
    """
    per_library: Dict[str, List[int]] = {}
    unresolved: List[str] = []
    by_library: Dict[str, List[InvocationAttempt]] = {}
    for inv in summarize_invocations(history):
        by_library.setdefault(inv.library, []).append(inv)

    for library in sorted(by_library):
        outage_start: Optional[int] = None
        for inv in by_library[library]:
            if inv.failed and outage_start is None:
                outage_start = inv.when
            elif not inv.failed and outage_start is not None:
                per_library.setdefault(library, []).append(inv.when - outage_start)
                outage_start = None
        if outage_start is not None:
            unresolved.append(library)

    durations = sorted(d for ds in per_library.values() for d in ds)
    return {
        "per_library": per_library,
        "unresolved": unresolved,
        "summary": {
            "recovered": len(durations),
            "median_seconds": statistics.median(durations) if durations else None,
            "within_window": sum(1 for d in durations if d <= window),
            "window_seconds": window,
        },
    }


@dataclass
class CiHistory:
    """``ci_history.jsonl``: every CiRecord ever produced, in run order."""

    path: Path
    _log: AppendLog = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.path = Path(self.path)
        self._log = AppendLog(self.path)

    def append(self, records: Iterable[CiRecord]) -> None:
        self._log.extend([r.to_json() for r in records])

    def load(self) -> List[CiRecord]:
        return [CiRecord.from_json(doc) for doc in self._log.replay().records]
