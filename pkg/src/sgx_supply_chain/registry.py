# SGX Supply Chain Toolkit
# File: registry.py
# Version: v1

"""Package universe: dependency closures, coverage and diversity reports.

A :class:`RegistryGraph` is built once from a point-in-time snapshot document
and never mutated afterwards. Edges point from a package to each of its
dependencies; the graph is a DAG (cyclic dependencies are rejected on load).

Closure statistics skip dependencies that need no porting: "meta" packages
(syntax-level helpers that only act at compile time) and anything that is
directly usable inside an enclave without modification.
"""

from __future__ import annotations

import logging
import re
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from . import schemas
from .errors import RegistryError
from .models import PackageStatus

__all__ = [
    "PackageRecord",
    "RegistryGraph",
    "CoverageReport",
    "ClosureHistogram",
    "BUCKET_LABELS",
    "ManifestEntry",
    "DependentProject",
    "AdmissionCandidate",
    "AdmissionReport",
    "load_registry",
    "port_closure",
    "closure_histogram",
    "coverage_report",
    "category_tally",
    "find_dependents",
    "find_dependents_detailed",
    "admission_check",
    "parse_manifests",
]

log = logging.getLogger("sgx_supply_chain.registry")

BUCKET_LABELS: Tuple[str, ...] = ("0", "1", "2", "3", "4", "5", "6-10", "11-20", ">=21")


@dataclass(frozen=True)
class PackageRecord:
    name: str
    version: str
    deps: Tuple[str, ...] = ()
    status: PackageStatus = PackageStatus.CANDIDATE
    is_meta: bool = False
    category: str = "Miscellaneous"
    security_critical: bool = False

    @property
    def needs_porting(self) -> bool:
        """Whether this package counts toward a port closure."""
        return not self.is_meta and self.status is not PackageStatus.DIRECTLY_USABLE


@dataclass(frozen=True)
class RegistryGraph:
    """Immutable package graph; safe for concurrent reads."""

    packages: Mapping[str, PackageRecord]
    graph: nx.DiGraph = field(repr=False, compare=False)

    @property
    def edge_count(self) -> int:
        return self.graph.number_of_edges()

    def __contains__(self, name: object) -> bool:
        return name in self.packages

    def __len__(self) -> int:
        return len(self.packages)

    def get(self, name: str) -> PackageRecord:
        try:
            return self.packages[name]
        except KeyError:
            raise RegistryError(f"unknown package '{name}'", code="unknown_package", details={"name": name}) from None

    def topological_order(self) -> List[str]:
        """Dependencies before dependents; ties broken by name."""
        return list(nx.lexicographical_topological_sort(self.graph.reverse(copy=False)))


def _record_from_json(raw: Dict[str, Any]) -> PackageRecord:
    return PackageRecord(
        name=raw["name"],
        version=raw.get("version", ""),
        deps=tuple(raw.get("deps", ())),
        status=PackageStatus(raw.get("status", PackageStatus.CANDIDATE.value)),
        is_meta=bool(raw.get("is_meta", False)),
        category=raw.get("category") or "Miscellaneous",
        security_critical=bool(raw.get("security_critical", False)),
    )


def build_registry(records: Iterable[PackageRecord]) -> RegistryGraph:
    """Assemble and validate a graph from already-parsed records."""
    packages: Dict[str, PackageRecord] = {}
    for rec in records:
        if rec.name in packages:
            raise RegistryError(f"duplicate package name '{rec.name}'", code="duplicate_name", details={"name": rec.name})
        if rec.is_meta and rec.status is not PackageStatus.DIRECTLY_USABLE:
            raise RegistryError(
                f"meta package '{rec.name}' must have status directly_usable, not {rec.status.value}",
                code="invalid_record",
                details={"name": rec.name, "field": "status"},
            )
        packages[rec.name] = rec

    graph = nx.DiGraph()
    for name in sorted(packages):
        graph.add_node(name)
    for name in sorted(packages):
        for dep in packages[name].deps:
            if dep not in packages:
                raise RegistryError(
                    f"package '{name}' depends on unknown package '{dep}'",
                    code="unresolved_dependency",
                    details={"package": name, "name": dep},
                )
            graph.add_edge(name, dep)

    try:
        cycle = nx.find_cycle(graph, source=sorted(packages))
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        path = [u for u, _ in cycle] + [cycle[-1][1]]
        raise RegistryError(
            "dependency cycle: " + " -> ".join(path),
            code="cycle_detected",
            details={"path": path},
        )

    log.debug("registry loaded: %d packages, %d edges", graph.number_of_nodes(), graph.number_of_edges())
    return RegistryGraph(packages=dict(packages), graph=nx.freeze(graph))


def load_registry(snapshot: Dict[str, Any]) -> RegistryGraph:
    """Validate a snapshot document and build its :class:`RegistryGraph`."""
    schemas.validate(snapshot, schemas.REGISTRY_SNAPSHOT, source="registry snapshot")
    return build_registry(_record_from_json(raw) for raw in snapshot["packages"])


def port_closure(graph: RegistryGraph, root: str, *, strip: Iterable[str] = ()) -> FrozenSet[str]:
    """Transitive dependencies of ``root`` that must be ported.

    Meta and directly-usable packages are traversed but not counted. Names in
    ``strip`` (platform-only dependencies removed before porting) are cut
    together with everything reachable only through them.
    """
    graph.get(root)
    stripped = set(strip) - {root}
    seen = {root}
    queue = deque([root])
    closure = set()
    while queue:
        current = queue.popleft()
        for dep in graph.packages[current].deps:
            if dep in seen or dep in stripped:
                continue
            seen.add(dep)
            queue.append(dep)
            if graph.packages[dep].needs_porting:
                closure.add(dep)
    return frozenset(closure)


@dataclass(frozen=True)
class ClosureHistogram:
    buckets: Dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.buckets.values())

    def to_json(self) -> Dict[str, Any]:
        return {"buckets": dict(self.buckets), "total": self.total}


def bucket_for(size: int) -> str:
    if size <= 5:
        return str(size)
    if size <= 10:
        return "6-10"
    if size <= 20:
        return "11-20"
    return ">=21"


def closure_histogram(graph: RegistryGraph, roots: Sequence[str]) -> ClosureHistogram:
    buckets = {label: 0 for label in BUCKET_LABELS}
    for root in roots:
        buckets[bucket_for(len(port_closure(graph, root)))] += 1
    return ClosureHistogram(buckets=buckets)


@dataclass(frozen=True)
class CoverageReport:
    total: int
    ported: int
    directly_usable: int
    inapplicable: int
    not_ported: int

    @property
    def availability_rate(self) -> float:
        if self.total == 0:
            return 0.0
        return (self.ported + self.directly_usable) / self.total

    def to_json(self) -> Dict[str, Any]:
        return {
            "total": self.total,
            "ported": self.ported,
            "directly_usable": self.directly_usable,
            "inapplicable": self.inapplicable,
            "not_ported": self.not_ported,
            "availability_rate": round(self.availability_rate, 6),
        }


def coverage_report(graph: RegistryGraph, ranked: Sequence[str], top_n: int) -> CoverageReport:
    """Status counts over the ``top_n`` most popular packages."""
    if top_n < 0 or top_n > len(ranked):
        raise RegistryError(
            f"top_n={top_n} outside 0..{len(ranked)}",
            code="top_n_out_of_range",
            details={"top_n": top_n, "ranked": len(ranked)},
        )
    counts = Counter(graph.get(name).status for name in ranked[:top_n])
    return CoverageReport(
        total=top_n,
        ported=counts[PackageStatus.PORTED],
        directly_usable=counts[PackageStatus.DIRECTLY_USABLE],
        inapplicable=counts[PackageStatus.INAPPLICABLE],
        not_ported=counts[PackageStatus.CANDIDATE],
    )


def category_tally(graph: RegistryGraph) -> Dict[str, int]:
    """Ported packages per functionality category, sorted by category name."""
    counts = Counter(rec.category for rec in graph.packages.values() if rec.status is PackageStatus.PORTED)
    return {category: counts[category] for category in sorted(counts)}


# ---------------------------------------------------------------------------
# Dependent-project discovery
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    manifest_text: str
    has_description: bool = False
    has_docs: bool = False
    active_commits: bool = False
    is_educational: bool = False

    @property
    def passes_screening(self) -> bool:
        return self.has_description and self.has_docs and self.active_commits and not self.is_educational


@dataclass(frozen=True)
class DependentProject:
    id: str
    libraries: Tuple[str, ...]

    @property
    def dependency_count(self) -> int:
        return len(self.libraries)


def parse_manifests(rows: Iterable[Dict[str, Any]]) -> List[ManifestEntry]:
    out = []
    for row in rows:
        schemas.validate(row, schemas.MANIFEST_ENTRY, source="manifest corpus")
        out.append(
            ManifestEntry(
                id=row["id"],
                manifest_text=row["manifest_text"],
                has_description=bool(row.get("has_description", False)),
                has_docs=bool(row.get("has_docs", False)),
                active_commits=bool(row.get("active_commits", False)),
                is_educational=bool(row.get("is_educational", False)),
            )
        )
    return out


def _check_keyword(keyword: str) -> None:
    if not keyword:
        raise RegistryError("keyword must be nonempty", code="empty_keyword")


def find_dependents_detailed(manifests: Sequence[ManifestEntry], keyword: str) -> List[DependentProject]:
    """Screened projects whose manifest mentions ``keyword``, in input order.

    Each result lists the distinct supply-chain libraries referenced through
    ``…/<keyword>/<library>`` URLs.
    """
    _check_keyword(keyword)
    lib_ref = re.compile(re.escape(keyword) + r"/([A-Za-z0-9_.\-]+)")
    out = []
    for entry in manifests:
        if keyword not in entry.manifest_text or not entry.passes_screening:
            continue
        libs = sorted({m.group(1).removesuffix(".git") for m in lib_ref.finditer(entry.manifest_text)})
        out.append(DependentProject(id=entry.id, libraries=tuple(libs)))
    log.info("dependent search for %r: %d of %d manifests qualified", keyword, len(out), len(manifests))
    return out


def find_dependents(manifests: Sequence[ManifestEntry], keyword: str) -> List[str]:
    return [p.id for p in find_dependents_detailed(manifests, keyword)]


# ---------------------------------------------------------------------------
# Admission checklist
# ---------------------------------------------------------------------------

ADMISSION_CRITERIA = ("widely_demanded", "high_quality", "api_stable", "irreplaceable_dependency")
ADMISSION_THRESHOLD = 2


@dataclass(frozen=True)
class AdmissionCandidate:
    widely_demanded: bool = False
    high_quality: bool = False
    api_stable: bool = False
    irreplaceable_dependency: bool = False


@dataclass(frozen=True)
class AdmissionReport:
    """Advisory only: selection stays a case-by-case human decision."""

    score: int
    admitted_hint: bool
    met: Tuple[str, ...]

    def to_json(self) -> Dict[str, Any]:
        return {"score": self.score, "admitted_hint": self.admitted_hint, "met": list(self.met), "advisory": True}


def admission_check(candidate: AdmissionCandidate, *, threshold: Optional[int] = None) -> AdmissionReport:
    met = tuple(name for name in ADMISSION_CRITERIA if getattr(candidate, name))
    bar = ADMISSION_THRESHOLD if threshold is None else threshold
    return AdmissionReport(score=len(met), admitted_hint=len(met) >= bar, met=met)
