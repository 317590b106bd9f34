# SGX Supply Chain Toolkit
# File: planner.py
# Version: v1

"""Porting plans for candidate libraries.

A plan follows the five porting steps in order:

1. dependency order (abort when a dependency cannot live in an enclave),
2. remediation of untrusted resource usage (OCall or trusted substitute),
3. removal of thread spawning,
4. test pruning and consolidation behind one enclave entry call,
5. pruning of feature flags that do not matter on SGX hardware.

Everything here is pure: same inputs, same plan.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from .models import PackageStatus, ResourceKind
from .registry import RegistryGraph, port_closure

__all__ = [
    "ResourceUsage",
    "RemediationKind",
    "RemediationAction",
    "Abort",
    "SuiteActions",
    "PortPlan",
    "TRUSTED_SUBSTITUTES",
    "port_order",
    "plan_remediations",
    "build_plan",
    "parse_usages",
]


@dataclass(frozen=True)
class ResourceUsage:
    function: str
    kind: ResourceKind
    security_sensitive: bool

    def to_json(self) -> Dict[str, Any]:
        return {"function": self.function, "kind": self.kind.value, "security_sensitive": self.security_sensitive}


class RemediationKind(str, Enum):
    OCALL_WRAPPER = "ocall_wrapper"
    TRUSTED_SUBSTITUTE = "trusted_substitute"
    PRUNE = "prune"


#: Trusted in-enclave counterparts for sensitive resources.
TRUSTED_SUBSTITUTES: Dict[ResourceKind, str] = {
    ResourceKind.FILE_IO: "protected-fs",
    ResourceKind.RANDOMNESS: "hw-rng",
    ResourceKind.TIME: "trusted-time",
}


@dataclass(frozen=True)
class RemediationAction:
    usage: ResourceUsage
    action: RemediationKind
    substitute: Optional[str] = None

    def __post_init__(self) -> None:
        if self.action is RemediationKind.OCALL_WRAPPER and self.usage.security_sensitive:
            raise ValueError(f"security-sensitive usage in '{self.usage.function}' cannot be served by an OCall")
        if (self.action is RemediationKind.TRUSTED_SUBSTITUTE) != (self.substitute is not None):
            raise ValueError("substitute is set exactly for trusted_substitute actions")

    @property
    def needs_review(self) -> bool:
        # Substitutes cost performance; a maintainer confirms they are necessary.
        return self.action is RemediationKind.TRUSTED_SUBSTITUTE

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"usage": self.usage.to_json(), "action": self.action.value}
        if self.substitute is not None:
            out["substitute"] = self.substitute
        out["needs_review"] = self.needs_review
        return out


@dataclass(frozen=True)
class Abort:
    """Porting cannot proceed: some dependency is inapplicable to SGX."""

    blocker: str
    blockers: Tuple[str, ...]
    root: str

    @property
    def reason(self) -> str:
        return f"dependency '{self.blocker}' of '{self.root}' is not applicable to SGX; porting aborted"

    def to_json(self) -> Dict[str, Any]:
        return {"aborted": True, "root": self.root, "blocker": self.blocker, "blockers": list(self.blockers), "reason": self.reason}


@dataclass(frozen=True)
class SuiteActions:
    pruned_tests: Tuple[str, ...]
    surviving_tests: Tuple[str, ...]
    consolidated_entrypoint: str


@dataclass(frozen=True)
class PortPlan:
    root: str
    order: Tuple[str, ...]
    remediations: Tuple[RemediationAction, ...]
    thread_removals: Tuple[str, ...]
    test_actions: SuiteActions
    feature_prunes: Tuple[str, ...]
    stripped: Tuple[str, ...] = field(default=())

    def to_json(self) -> Dict[str, Any]:
        # Field order is part of the output format.
        return {
            "root": self.root,
            "order": list(self.order),
            "stripped": list(self.stripped),
            "remediations": [a.to_json() for a in self.remediations],
            "thread_removals": list(self.thread_removals),
            "test_actions": {
                "pruned_tests": list(self.test_actions.pruned_tests),
                "surviving_tests": list(self.test_actions.surviving_tests),
                "consolidated_entrypoint": self.test_actions.consolidated_entrypoint,
            },
            "feature_prunes": list(self.feature_prunes),
        }


def port_order(graph: RegistryGraph, root: str, *, strip: Iterable[str] = ()) -> Union[List[str], Abort]:
    """Dependencies first, ``root`` last, ties broken by name."""
    stripped = set(strip) - {root}
    closure = port_closure(graph, root, strip=stripped)
    blockers = sorted(n for n in closure if graph.packages[n].status is PackageStatus.INAPPLICABLE)
    if blockers:
        return Abort(blocker=blockers[0], blockers=tuple(blockers), root=root)

    members = set(closure) | {root}
    usable = graph.graph.subgraph(n for n in graph.graph if n not in stripped)
    order_graph = nx.DiGraph()
    order_graph.add_nodes_from(members)
    # Meta nodes are excluded from the plan but still carry ordering constraints.
    for node in members:
        for dep in nx.descendants(usable, node) & members:
            order_graph.add_edge(dep, node)
    return list(nx.lexicographical_topological_sort(order_graph))


def _remediate(usage: ResourceUsage) -> RemediationAction:
    if usage.kind is ResourceKind.THREAD_SPAWN:
        return RemediationAction(usage, RemediationKind.PRUNE)
    if not usage.security_sensitive:
        return RemediationAction(usage, RemediationKind.OCALL_WRAPPER)
    substitute = TRUSTED_SUBSTITUTES.get(usage.kind)
    if substitute is not None:
        return RemediationAction(usage, RemediationKind.TRUSTED_SUBSTITUTE, substitute)
    return RemediationAction(usage, RemediationKind.PRUNE)


def plan_remediations(usages: Sequence[ResourceUsage]) -> List[RemediationAction]:
    return [_remediate(u) for u in usages]


def _entrypoint_name(root: str) -> str:
    return "ecall_run_" + re.sub(r"[^A-Za-z0-9_]", "_", root) + "_tests"


def build_plan(
    graph: RegistryGraph,
    root: str,
    usages: Sequence[ResourceUsage],
    declared_tests: Sequence[Tuple[str, bool]] = (),
    features: Sequence[Tuple[str, bool]] = (),
    *,
    strip: Iterable[str] = (),
) -> Union[PortPlan, Abort]:
    """Assemble the full plan, or the :class:`Abort` from :func:`port_order`."""
    stripped = tuple(sorted(set(strip) - {root}))
    order = port_order(graph, root, strip=stripped)
    if isinstance(order, Abort):
        return order

    thread_removals: List[str] = []
    for usage in usages:
        if usage.kind is ResourceKind.THREAD_SPAWN and usage.function not in thread_removals:
            thread_removals.append(usage.function)

    pruned = tuple(name for name, depends_on_pruned in declared_tests if depends_on_pruned)
    surviving = tuple(name for name, depends_on_pruned in declared_tests if not depends_on_pruned)

    return PortPlan(
        root=root,
        order=tuple(order),
        remediations=tuple(plan_remediations(usages)),
        thread_removals=tuple(thread_removals),
        test_actions=SuiteActions(
            pruned_tests=pruned,
            surviving_tests=surviving,
            consolidated_entrypoint=_entrypoint_name(root),
        ),
        feature_prunes=tuple(flag for flag, sgx_relevant in features if not sgx_relevant),
        stripped=stripped,
    )


def parse_usages(rows: Iterable[Dict[str, Any]]) -> List[ResourceUsage]:
    return [
        ResourceUsage(function=r["function"], kind=ResourceKind(r["kind"]), security_sensitive=bool(r["security_sensitive"]))
        for r in rows
    ]
