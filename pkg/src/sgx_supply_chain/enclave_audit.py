# SGX Supply Chain Toolkit
# File: enclave_audit.py
# Version: v1

"""Untrusted-resource audit for enclave code.

Input is a call graph of *facts*: functions, the functions they call, the
untrusted resources they touch and whether they are enclave entry points.
:func:`audit` reports every resource reachable from an entry point together
with a shortest witness path, so reviewers see how trusted code ends up
reading a file, the clock or randomness from the host.

The analysis is a context- and flow-insensitive reachability
over-approximation. :func:`extract_facts` is a best-effort front end for
Rust-style sources following a fixed convention:

- a function starts at a line containing ``fn <name>`` (``pub``, ``unsafe``
  and ``extern "C"`` prefixes allowed) and runs until the next definition;
- ``#[ecall]`` or ``// @ecall`` on a line directly above a definition marks
  an entry point;
- ``name(`` or ``path::name(`` in a body is a call, resolved by full name
  then by last path segment; calls that resolve to no definition are
  dropped;
- a pattern-table key occurring as a whole token in a body is a resource
  use at ``path:line``.

Text after ``//`` is ignored when scanning for calls and patterns.
"""

from __future__ import annotations

import logging
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from . import schemas
from .errors import AuditError
from .models import ResourceKind
from .planner import RemediationAction, ResourceUsage, plan_remediations

__all__ = [
    "ResourceFact",
    "FunctionFacts",
    "CallGraph",
    "Severity",
    "ResourceWarning",
    "load_facts",
    "audit",
    "extract_facts",
    "audit_to_plan",
    "load_pattern_table",
    "text_report",
]

log = logging.getLogger("sgx_supply_chain.enclave_audit")


@dataclass(frozen=True)
class ResourceFact:
    kind: ResourceKind
    site: str = ""


@dataclass(frozen=True)
class FunctionFacts:
    name: str
    calls: Tuple[str, ...] = ()
    resources: Tuple[ResourceFact, ...] = ()
    is_entrypoint: bool = False


@dataclass(frozen=True)
class CallGraph:
    functions: Mapping[str, FunctionFacts]
    graph: nx.DiGraph = field(repr=False, compare=False)

    @property
    def entrypoints(self) -> List[str]:
        return sorted(n for n, f in self.functions.items() if f.is_entrypoint)


def load_facts(document: Dict[str, Any]) -> CallGraph:
    schemas.validate(document, schemas.FACTS_DOCUMENT, source="facts document")
    functions: Dict[str, FunctionFacts] = {}
    for raw in document["functions"]:
        name = raw["name"]
        if name in functions:
            raise AuditError(f"function '{name}' declared twice", code="duplicate_function", details={"name": name})
        functions[name] = FunctionFacts(
            name=name,
            calls=tuple(raw.get("calls", ())),
            resources=tuple(ResourceFact(ResourceKind(r["kind"]), r.get("site", "")) for r in raw.get("resources", ())),
            is_entrypoint=bool(raw.get("is_entrypoint", False)),
        )

    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(functions))
    for name in sorted(functions):
        for callee in functions[name].calls:
            if callee not in functions:
                raise AuditError(
                    f"'{name}' calls undeclared function '{callee}'",
                    code="unknown_callee",
                    details={"caller": name, "name": callee},
                )
            graph.add_edge(name, callee)
    return CallGraph(functions=functions, graph=nx.freeze(graph))


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ResourceWarning:
    entrypoint: str
    sink_function: str
    kind: ResourceKind
    path: Tuple[str, ...]
    severity: Severity
    sites: Tuple[str, ...] = ()

    def to_json(self) -> Dict[str, Any]:
        return {
            "entrypoint": self.entrypoint,
            "sink_function": self.sink_function,
            "kind": self.kind.value,
            "severity": self.severity.value,
            "path": list(self.path),
            "sites": list(self.sites),
        }


def _severity(kind: ResourceKind) -> Severity:
    # Enclave ports must not spawn threads at all.
    return Severity.ERROR if kind is ResourceKind.THREAD_SPAWN else Severity.WARNING


def _shortest_paths(graph: CallGraph, entry: str) -> Dict[str, Tuple[str, ...]]:
    """BFS over sorted callees: the first path found is the lexicographically least shortest one."""
    paths: Dict[str, Tuple[str, ...]] = {entry: (entry,)}
    queue = deque([entry])
    while queue:
        current = queue.popleft()
        for callee in sorted(graph.graph.successors(current)):
            if callee not in paths:
                paths[callee] = paths[current] + (callee,)
                queue.append(callee)
    return paths


def audit(graph: CallGraph) -> List[ResourceWarning]:
    """One warning per (entrypoint, sink function, resource kind)."""
    warnings: List[ResourceWarning] = []
    for entry in graph.entrypoints:
        for sink, path in _shortest_paths(graph, entry).items():
            by_kind: Dict[ResourceKind, List[str]] = {}
            for fact in graph.functions[sink].resources:
                by_kind.setdefault(fact.kind, []).append(fact.site)
            for kind, sites in by_kind.items():
                warnings.append(ResourceWarning(entry, sink, kind, path, _severity(kind), tuple(sorted(set(sites)))))
    warnings.sort(key=lambda w: (w.entrypoint, w.sink_function, w.kind.value))
    log.debug("audit: %d warning(s) over %d entrypoint(s)", len(warnings), len(graph.entrypoints))
    return warnings


def text_report(warnings: Sequence[ResourceWarning]) -> str:
    lines = []
    for w in warnings:
        where = ", ".join(s for s in w.sites if s) or "-"
        lines.append(f"{w.severity.value.upper()} {w.kind.value} {w.entrypoint}: {' → '.join(w.path)} @ {where}")
    return "\n".join(lines)


def audit_to_plan(warnings: Iterable[ResourceWarning], sensitivity: Mapping[str, bool]) -> List[RemediationAction]:
    """Turn findings into port-plan remediations, one per (sink, kind)."""
    usages: List[ResourceUsage] = []
    seen = set()
    for w in sorted(warnings, key=lambda w: (w.sink_function, w.kind.value)):
        key = (w.sink_function, w.kind)
        if key in seen:
            continue
        seen.add(key)
        if w.sink_function not in sensitivity:
            raise AuditError(
                f"no sensitivity recorded for '{w.sink_function}'",
                code="missing_sensitivity",
                details={"function": w.sink_function},
            )
        usages.append(ResourceUsage(w.sink_function, w.kind, bool(sensitivity[w.sink_function])))
    return plan_remediations(usages)


# ---------------------------------------------------------------------------
# Fact extraction
# ---------------------------------------------------------------------------

_DEF = re.compile(r'^\s*(?:pub(?:\([^)]*\))?\s+)?(?:unsafe\s+)?(?:extern\s+"[^"]*"\s+)?fn\s+([A-Za-z_][A-Za-z0-9_]*)')
_CALL = re.compile(r"(?<![A-Za-z0-9_:])([A-Za-z_][A-Za-z0-9_]*(?:::[A-Za-z_][A-Za-z0-9_]*)*)\s*\(")
_MARKER = re.compile(r"^\s*(?:#\[ecall\]|//\s*@ecall\b)")
_ATTRIBUTE = re.compile(r"^\s*(?:#\[|//)")


def load_pattern_table(document: Dict[str, Any]) -> Dict[str, ResourceKind]:
    schemas.validate(document, schemas.PATTERN_TABLE, source="pattern table")
    return {pattern: ResourceKind(kind) for pattern, kind in document.items()}


@dataclass
class _Body:
    name: str
    path: str
    entry: bool
    lines: List[Tuple[int, str]] = field(default_factory=list)


def _split_functions(path: str, text: str) -> List[_Body]:
    bodies: List[_Body] = []
    current: Optional[_Body] = None
    marked = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        match = _DEF.match(line)
        if match:
            current = _Body(match.group(1), path, marked)
            bodies.append(current)
            marked = False
            tail = line[match.end():]
            current.lines.append((lineno, tail))
            continue
        if _MARKER.match(line):
            marked = True
        elif line.strip() and not _ATTRIBUTE.match(line):
            marked = False
        if current is not None:
            current.lines.append((lineno, line))
    return bodies


def _token_pattern(pattern: str) -> re.Pattern[str]:
    return re.compile(r"(?<![A-Za-z0-9_:])" + re.escape(pattern) + r"(?![A-Za-z0-9_])")


def extract_facts(sources: Mapping[str, str], table: Mapping[str, ResourceKind], convention: str = "rust") -> Dict[str, Any]:
    """Scan ``sources`` into a facts document accepted by :func:`load_facts`."""
    if convention != "rust":
        raise ValueError(f"unsupported call syntax convention '{convention}'")

    bodies: List[_Body] = []
    for path in sorted(sources):
        bodies.extend(_split_functions(path, sources[path]))
    defined = {b.name for b in bodies}
    patterns = [(p, _token_pattern(p), kind) for p, kind in sorted(table.items())]

    merged: Dict[str, Dict[str, Any]] = {}
    for body in bodies:
        entry = merged.setdefault(body.name, {"name": body.name, "is_entrypoint": False, "calls": [], "resources": []})
        entry["is_entrypoint"] = entry["is_entrypoint"] or body.entry
        for lineno, raw in body.lines:
            code = raw.split("//", 1)[0]
            for call in _CALL.finditer(code):
                token = call.group(1)
                target = token if token in defined else token.rsplit("::", 1)[-1]
                if target in defined and target not in entry["calls"]:
                    entry["calls"].append(target)
            for _, regex, kind in patterns:
                if regex.search(code):
                    entry["resources"].append({"kind": kind.value, "site": f"{body.path}:{lineno}"})

    functions = []
    for name in sorted(merged):
        facts = merged[name]
        facts["calls"] = sorted(facts["calls"])
        functions.append(facts)
    log.debug("extracted %d function(s) from %d file(s)", len(functions), len(sources))
    return {"functions": functions}
