# SGX Supply Chain Toolkit
# File: cli/commands.py
# Version: v1

"""Command bodies.

Each function takes the :class:`CommandContext` and the parsed arguments and
returns a :class:`CommandResult`. Loading, validation and persistence live
here; the analysis itself is delegated to the domain modules.

State directory layout::

    <state>/scheduler.toml          policy (optional)
    <state>/scheduler_state.json    caches, review queue, escalations
    <state>/decisions.jsonl         append-only merge decision log
    <state>/ci_history.jsonl        append-only CI records
    <state>/repos/<library>/        HEADS.json, commits/, escalations.jsonl
    <state>/audit.log               operator audit trail (when enabled)
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .. import ci, enclave_audit, planner, registry, schemas, svn
from ..cache import Patch
from ..config import CiConfig, SchedulerConfig, ToolkitConfig, load_settings
from ..errors import SchedulerError
from ..merge import FileTree
from ..models import PackageStatus
from ..policy import disclosure
from ..repo import Escalation, RepoState, RepoStore, advance_upstream, commit_fork, init_repo, resolve_escalation
from ..runners import CiRunner, ScriptedRunner, load_runner
from ..scheduler import (
    SchedulerState,
    SchedulerStore,
    StepAction,
    approve_review,
    complete_escalation,
    ingest_patches,
    scheduler_step,
)
from ._gated import CommandResult

__all__ = ["CommandContext", "HANDLERS"]

log = logging.getLogger("sgx_supply_chain.cli")


@dataclass
class CommandContext:
    config: ToolkitConfig
    now: int
    format: str = "json"
    _settings: Optional[Tuple[SchedulerConfig, CiConfig]] = field(default=None, repr=False)

    def settings(self) -> Tuple[SchedulerConfig, CiConfig]:
        if self._settings is None:
            self._settings = load_settings(self.config.config_path)
        return self._settings

    @property
    def scheduler_config(self) -> SchedulerConfig:
        return self.settings()[0]

    @property
    def ci_config(self) -> CiConfig:
        return self.settings()[1]

    @property
    def repos(self) -> RepoStore:
        return RepoStore(self.config.state_dir / "repos")

    @property
    def scheduler_store(self) -> SchedulerStore:
        return SchedulerStore(self.config.state_dir)

    @property
    def ci_history(self) -> ci.CiHistory:
        return ci.CiHistory(self.config.state_dir / "ci_history.jsonl")


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def _load_graph(path: str) -> registry.RegistryGraph:
    return registry.load_registry(schemas.load_json(path, schemas.REGISTRY_SNAPSHOT))


def registry_report(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    graph = _load_graph(args.snapshot)
    ranked = schemas.load_json(args.ranked, schemas.NAME_LIST)
    top_n = len(ranked) if args.top is None else args.top
    report = registry.coverage_report(graph, ranked, top_n)
    payload = {"top_n": top_n, **report.to_json()}
    text = (
        f"top {top_n}: ported {report.ported}, directly usable {report.directly_usable}, "
        f"inapplicable {report.inapplicable}, not ported {report.not_ported}, "
        f"availability {report.availability_rate:.2%}"
    )
    return CommandResult(payload, text=text)


def registry_histogram(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    graph = _load_graph(args.snapshot)
    if args.roots:
        roots = schemas.load_json(args.roots, schemas.NAME_LIST)
    else:
        roots = sorted(n for n, rec in graph.packages.items() if rec.status is PackageStatus.PORTED)
    histogram = registry.closure_histogram(graph, roots)
    text = "\n".join(f"{label:>6} {count}" for label, count in histogram.buckets.items())
    return CommandResult(histogram.to_json(), text=text + f"\n{'total':>6} {histogram.total}")


def registry_dependents(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    manifests = registry.parse_manifests(schemas.load_jsonl(args.manifests))
    found = registry.find_dependents_detailed(manifests, args.keyword)
    payload = {
        "keyword": args.keyword,
        "count": len(found),
        "projects": [{"id": p.id, "libraries": list(p.libraries), "dependency_count": p.dependency_count} for p in found],
    }
    text = "\n".join(f"{p.id}\t{p.dependency_count}" for p in found)
    return CommandResult(payload, text=text)


def registry_tally(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    tally = registry.category_tally(_load_graph(args.snapshot))
    ordered = sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))
    text = "\n".join(f"{count:>4} {category}" for category, count in ordered)
    return CommandResult({"categories": tally, "total": sum(tally.values())}, text=text)


def registry_admit(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    candidate = registry.AdmissionCandidate(
        widely_demanded=args.widely_demanded,
        high_quality=args.high_quality,
        api_stable=args.api_stable,
        irreplaceable_dependency=args.irreplaceable_dependency,
    )
    report = registry.admission_check(candidate, threshold=args.threshold)
    return CommandResult({"library": args.library, **report.to_json()})


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------


def _plan_request(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    doc = schemas.load_json(path)
    if isinstance(doc, list):
        doc = {"usages": doc}
    return schemas.validate(doc, schemas.PLAN_REQUEST, source=path)


def plan(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    graph = _load_graph(args.snapshot)
    request = _plan_request(args.usages)
    root = args.root or request.get("root")
    if not root:
        raise ValueError("a root package is required (--root or \"root\" in the request)")
    result = planner.build_plan(
        graph,
        root,
        planner.parse_usages(request.get("usages", ())),
        [(t["name"], t["depends_on_pruned"]) for t in request.get("tests", ())],
        [(f["flag"], f["sgx_relevant"]) for f in request.get("features", ())],
        strip=[*request.get("strip", ()), *(args.strip or ())],
    )
    if isinstance(result, planner.Abort):
        return CommandResult(result.to_json(), findings=True, text=result.reason)
    text = "\n".join(f"{i}. {name}" for i, name in enumerate(result.order, start=1))
    return CommandResult(result.to_json(), text=text)


# ---------------------------------------------------------------------------
# repo
# ---------------------------------------------------------------------------


def _tree(path: Optional[str]) -> Optional[FileTree]:
    if not path:
        return None
    return FileTree.from_json(schemas.load_json(path, schemas.FILE_TREE), source=path)


def repo_init(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    store = ctx.repos
    if args.library in store.libraries() and not args.force:
        raise ValueError(f"repository for '{args.library}' already exists (use --force to replace it)")
    base = _tree(args.base)
    assert base is not None
    repo = init_repo(args.library, base, _tree(args.upstream), _tree(args.fork), timestamp=ctx.now)
    store.save(repo)
    return CommandResult(repo.heads_json())


def repo_advance(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    store = ctx.repos
    repo = store.load(args.library)
    tree = _tree(args.tree)
    assert tree is not None
    if args.side == "upstream":
        commit_id = advance_upstream(repo, tree, args.message, ctx.now)
    else:
        commit_id = commit_fork(repo, tree, args.message, ctx.now)
    store.save(repo)
    return CommandResult({"side": args.side, "commit": commit_id, **repo.heads_json()})


def repo_resolve(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    sched_store = ctx.scheduler_store
    state = sched_store.load()
    pending = state.escalations.get(args.library)
    if pending is None:
        raise SchedulerError(
            f"no pending escalation for '{args.library}'", code="nothing_pending", details={"library": args.library}
        )
    store = ctx.repos
    repo = store.load(args.library)
    tree = _tree(args.tree)
    assert tree is not None
    merged = resolve_escalation(repo, pending.escalation, tree, ctx.now)
    new_state, decision = complete_escalation(state, args.library, args.resolver, ctx.now, merged)
    store.save(repo)
    sched_store.save(new_state, now=ctx.now)
    return CommandResult({"merge": merged.to_json(), "decision": decision.to_json()})


# ---------------------------------------------------------------------------
# scheduler
# ---------------------------------------------------------------------------


def scheduler_ingest(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    rows = schemas.load_jsonl(args.patches, schemas.PATCH)
    patches = [Patch.from_json(row) for row in rows]
    store = ctx.scheduler_store
    state = ingest_patches(store.load(), ctx.scheduler_config, patches)
    store.save(state, now=ctx.now)
    return CommandResult(
        {
            "ingested": len(patches),
            "caches": {lib: state.caches[lib].stats() for lib in sorted(state.caches)},
        }
    )


def _persist_actions(store: RepoStore, repos: Dict[str, RepoState], actions: List[StepAction]) -> None:
    for action in actions:
        if action.kind == "merged":
            store.save(repos[action.library])
        elif action.kind == "escalated" and action.new:
            store.record_escalation(Escalation.from_json(action.detail["escalation"]))


def _state_summary(state: SchedulerState) -> Dict[str, Any]:
    return {
        "review_queue": [e.to_json() for e in state.review_queue],
        "escalations": [state.escalations[lib].to_json() for lib in sorted(state.escalations)],
    }


def _actions_text(actions: List[StepAction]) -> str:
    lines = []
    for a in actions:
        d = a.decision
        lines.append(f"{d.timestamp} {a.library} {a.kind} trigger={d.trigger.value} patches={','.join(d.patch_ids)}")
    return "\n".join(lines)


def scheduler_step_cmd(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    sched_store = ctx.scheduler_store
    repo_store = ctx.repos
    repos = repo_store.load_all()
    state, actions = scheduler_step(sched_store.load(), ctx.scheduler_config, repos, ctx.now)
    # Repository commits first: a re-run after a failed snapshot write only
    # finds a no-op merge.
    _persist_actions(repo_store, repos, actions)
    sched_store.save(state, now=ctx.now)
    findings = any(a.kind in ("escalated", "queued_for_review") for a in actions)
    payload = {"now": ctx.now, "actions": [a.to_json() for a in actions], **_state_summary(state)}
    return CommandResult(payload, findings=findings, text=_actions_text(actions))


def scheduler_approve(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    sched_store = ctx.scheduler_store
    repo_store = ctx.repos
    state = sched_store.load()
    repos = {args.library: repo_store.load(args.library)} if args.library in repo_store.libraries() else {}
    state, action = approve_review(state, args.library, args.approver, ctx.now, repos)
    _persist_actions(repo_store, repos, [action])
    sched_store.save(state, now=ctx.now)
    payload = {"action": action.to_json(), **_state_summary(state)}
    return CommandResult(payload, findings=action.kind == "escalated", text=_actions_text([action]))


def scheduler_policy(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    config = ctx.scheduler_config
    payload = {
        **disclosure(config.manual_review),
        "keywords": sorted(config.keywords),
        "max_age_seconds": config.max_age,
        "capacity": config.default_capacity,
    }
    text = "\n".join(f"{row['library']}\t{row['functionality']}" for row in payload["manual_review"])
    return CommandResult(payload, text=text)


def scheduler_status(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    state = ctx.scheduler_store.load()
    payload = {
        "caches": {lib: state.caches[lib].stats() for lib in sorted(state.caches)},
        "last_merge": dict(sorted(state.last_merge.items())),
        "decisions": len(state.decision_log),
        **_state_summary(state),
    }
    return CommandResult(payload)


# ---------------------------------------------------------------------------
# ci
# ---------------------------------------------------------------------------


def _runner(ctx: CommandContext, args: argparse.Namespace) -> CiRunner:
    if getattr(args, "script", None):
        return ScriptedRunner(schemas.load_json(args.script, schemas.CI_SCRIPT))
    return load_runner(ctx.config.ci_runner)


def _workers(ctx: CommandContext) -> int:
    return max(1, min(ctx.ci_config.max_parallel, ctx.config.ci_max_parallel))


def _records_text(records: List[ci.CiRecord]) -> str:
    lines = []
    for r in records:
        status = r.outcome.value if r.category is None else f"{r.outcome.value} ({r.category.value})"
        lines.append(f"{r.library}\t{r.config.label}\t{status}\tattempts={r.attempts}")
    return "\n".join(lines)


def ci_run(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    configs = ci.expand_matrix(ctx.ci_config.matrix())
    records = ci.run_ci(
        args.library, configs, _runner(ctx, args), ctx.ci_config.retry_budget, ctx.now, max_parallel=_workers(ctx)
    )
    ctx.ci_history.append(records)
    failed = [r for r in records if r.failed]
    payload = {"library": args.library, "when": ctx.now, "failed": len(failed), "records": [r.to_json() for r in records]}
    return CommandResult(payload, findings=bool(failed), text=_records_text(records))


def ci_sweep(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    libraries = args.library or ctx.repos.libraries()
    configs = ci.expand_matrix(ctx.ci_config.matrix())
    result = ci.daily_sweep(
        libraries,
        configs,
        _runner(ctx, args),
        ctx.now,
        ctx.ci_config.mass_failure_threshold,
        retry_budget=ctx.ci_config.retry_budget,
        max_parallel=_workers(ctx),
    )
    ctx.ci_history.append(result.records)
    payload = {
        "when": ctx.now,
        "libraries": len(set(libraries)),
        "failing_libraries": result.failing_libraries,
        "mass_failure": result.event.to_json() if result.event else None,
        "records": [r.to_json() for r in result.records],
    }
    text = _records_text(result.records)
    if result.event:
        text += f"\nMASS FAILURE {result.event.count}/{result.event.total} libraries"
    return CommandResult(payload, findings=bool(result.failing_libraries), text=text)


def ci_report(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    attempts: List[Any] = list(ci.summarize_invocations(ctx.ci_history.load()))
    if args.include_merges:
        attempts.extend(ci.merge_attempts(ctx.scheduler_store.load().decision_log))
    reports = ci.weekly_aggregate(attempts, ctx.ci_config.week_epoch, weeks=args.weeks)
    payload = {"epoch": ctx.ci_config.week_epoch, "weeks": [r.to_json() for r in reports]}
    return CommandResult(payload, text=ci.weekly_csv(reports))


def ci_breakdown(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    history = ctx.ci_history.load()
    window = int(args.window_days * 86400)
    payload = {"breakdown": ci.failure_breakdown(history), "recovery": ci.recovery_times(history, window=window)}
    return CommandResult(payload)


# ---------------------------------------------------------------------------
# svn
# ---------------------------------------------------------------------------


def svn_check(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    events = svn.parse_events(schemas.load_jsonl(args.events))
    if args.enforce_latest_only:
        events = svn.enforce_latest_only(events)
    result = svn.check_linear(svn.derive_order(events))
    payload = result.to_json()
    if args.enforce_latest_only:
        payload["events"] = [e.to_json() for e in events]
    if isinstance(result, svn.Violation):
        return CommandResult(payload, findings=True, text=payload["reason"])
    rows = sorted(result.table.items(), key=lambda kv: (kv[0].library, kv[1], kv[0].key))
    text = "\n".join(f"{b.library}\trev {b.lib_rev}\tsdk {b.sdk_svn}\tsvn {rank}" for b, rank in rows)
    return CommandResult(payload, text=text)


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------


def _read_sources(directory: str, suffix: str) -> Dict[str, str]:
    root = Path(directory)
    if not root.is_dir():
        raise ValueError(f"{directory} is not a directory")
    return {
        p.relative_to(root).as_posix(): p.read_text(encoding="utf-8", errors="replace")
        for p in sorted(root.rglob(f"*{suffix}"))
        if p.is_file()
    }


def audit_cmd(ctx: CommandContext, args: argparse.Namespace) -> CommandResult:
    if args.facts:
        facts = schemas.load_json(args.facts, schemas.FACTS_DOCUMENT)
    elif args.sources and args.patterns:
        table = enclave_audit.load_pattern_table(schemas.load_json(args.patterns, schemas.PATTERN_TABLE))
        facts = enclave_audit.extract_facts(_read_sources(args.sources, args.suffix), table)
    else:
        raise ValueError("pass --facts, or --sources together with --patterns")

    warnings = enclave_audit.audit(enclave_audit.load_facts(facts))
    payload: Dict[str, Any] = {"warnings": [w.to_json() for w in warnings]}
    if args.sensitivity:
        sensitivity = schemas.load_json(args.sensitivity, {"type": "object", "additionalProperties": {"type": "boolean"}})
        payload["remediations"] = [a.to_json() for a in enclave_audit.audit_to_plan(warnings, sensitivity)]
    return CommandResult(payload, findings=bool(warnings), text=enclave_audit.text_report(warnings))


HANDLERS = {
    "registry report": registry_report,
    "registry histogram": registry_histogram,
    "registry dependents": registry_dependents,
    "registry tally": registry_tally,
    "registry admit": registry_admit,
    "plan": plan,
    "repo init": repo_init,
    "repo advance": repo_advance,
    "repo resolve": repo_resolve,
    "scheduler ingest": scheduler_ingest,
    "scheduler step": scheduler_step_cmd,
    "scheduler approve": scheduler_approve,
    "scheduler policy": scheduler_policy,
    "scheduler status": scheduler_status,
    "ci run": ci_run,
    "ci sweep": ci_sweep,
    "ci report": ci_report,
    "ci breakdown": ci_breakdown,
    "svn check": svn_check,
    "audit": audit_cmd,
}
