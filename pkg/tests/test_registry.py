# SGX Supply Chain Toolkit
# File: tests/test_registry.py
# Version: v1

from __future__ import annotations

import itertools
import random

import pytest

from sgx_supply_chain import registry
from sgx_supply_chain.errors import DocumentError, RegistryError

from tests import fixtures


def _snap(**deps):
    return {"packages": [{"name": n, "version": "1", "deps": d, "status": "candidate"} for n, d in deps.items()]}


def test_load_minimal_registry():
    graph = registry.load_registry(_snap(A=["B"], B=[]))
    assert len(graph) == 2
    assert graph.edge_count == 1
    assert graph.topological_order() == ["B", "A"]


def test_cycle_detected():
    with pytest.raises(RegistryError) as exc:
        registry.load_registry(_snap(A=["B"], B=["A"]))
    assert exc.value.code == "cycle_detected"
    assert exc.value.details["path"] == ["A", "B", "A"]


def test_unresolved_dependency():
    with pytest.raises(RegistryError) as exc:
        registry.load_registry(_snap(A=["X"]))
    assert exc.value.code == "unresolved_dependency"
    assert exc.value.details["name"] == "X"


def test_duplicate_name():
    snap = _snap(A=[])
    snap["packages"].append(dict(snap["packages"][0]))
    with pytest.raises(RegistryError) as exc:
        registry.load_registry(snap)
    assert exc.value.code == "duplicate_name"


def test_schema_violation_names_field():
    snap = _snap(A=[], B=[])
    snap["packages"][1]["status"] = "maybe"
    with pytest.raises(DocumentError) as exc:
        registry.load_registry(snap)
    assert exc.value.field == "packages/1/status"


def test_meta_package_must_be_directly_usable():
    snap = {"packages": [{"name": "m", "version": "1", "deps": [], "status": "ported", "is_meta": True}]}
    with pytest.raises(RegistryError) as exc:
        registry.load_registry(snap)
    assert exc.value.code == "invalid_record"


def test_port_closure_leaf_and_meta_filtering():
    snap = {
        "packages": [
            {"name": "A", "version": "1", "deps": ["B"], "status": "candidate"},
            {"name": "B", "version": "1", "deps": ["C"], "status": "directly_usable", "is_meta": True},
            {"name": "C", "version": "1", "deps": [], "status": "candidate"},
        ]
    }
    graph = registry.load_registry(snap)
    assert registry.port_closure(graph, "C") == frozenset()
    assert registry.port_closure(graph, "A") == frozenset({"C"})


def test_port_closure_diamond():
    graph = registry.load_registry(_snap(A=["B", "C"], B=["C"], C=[]))
    assert registry.port_closure(graph, "A") == frozenset({"B", "C"})


def test_port_closure_unknown_root():
    graph = registry.load_registry(_snap(A=[]))
    with pytest.raises(RegistryError) as exc:
        registry.port_closure(graph, "nope")
    assert exc.value.code == "unknown_package"


def test_port_closure_strip_cuts_subtree():
    graph = registry.load_registry(_snap(A=["B", "C"], B=["D"], C=[], D=[]))
    assert registry.port_closure(graph, "A", strip=["B"]) == frozenset({"C"})


def _paths_closure(graph: registry.RegistryGraph, root: str) -> set:
    """Exhaustive path enumeration: every node reachable by some dependency path."""
    found = set()

    def walk(node, seen):
        for dep in graph.packages[node].deps:
            if dep in seen:
                continue
            found.add(dep)
            walk(dep, seen | {dep})

    walk(root, {root})
    return {n for n in found if graph.packages[n].needs_porting}


def test_port_closure_matches_path_enumeration():
    rng = random.Random(99)
    statuses = ["candidate", "ported", "directly_usable", "inapplicable"]
    for _ in range(60):
        n = rng.randint(1, 9)
        names = [f"n{i}" for i in range(n)]
        packages = []
        for i, name in enumerate(names):
            deps = [names[j] for j in range(i + 1, n) if rng.random() < 0.3]
            status = rng.choice(statuses)
            meta = status == "directly_usable" and rng.random() < 0.5
            packages.append({"name": name, "version": "1", "deps": deps, "status": status, "is_meta": meta})
        graph = registry.load_registry({"packages": packages})
        for name in names:
            assert registry.port_closure(graph, name) == _paths_closure(graph, name)


def test_histogram_manual_buckets():
    # Chain n0 <- n1 <- ... gives closure sizes 0..25 for n0..n25.
    chain = {f"n{i:02d}": ([f"n{i - 1:02d}"] if i else []) for i in range(26)}
    graph = registry.load_registry(_snap(**chain))
    histogram = registry.closure_histogram(graph, ["n00", "n00", "n01", "n05", "n12", "n25"])
    assert histogram.buckets == {"0": 2, "1": 1, "2": 0, "3": 0, "4": 0, "5": 1, "6-10": 0, "11-20": 1, ">=21": 1}


def test_histogram_empty_roots():
    graph = registry.load_registry(_snap(A=[]))
    histogram = registry.closure_histogram(graph, [])
    assert set(histogram.buckets.values()) == {0}
    assert list(histogram.buckets) == list(registry.BUCKET_LABELS)


def test_histogram_reproduces_reference_distribution():
    snap = fixtures.registry_snapshot()
    graph = registry.load_registry(snap)
    histogram = registry.closure_histogram(graph, fixtures.ported_names(snap))
    assert histogram.buckets == fixtures.CLOSURE_HISTOGRAM
    assert histogram.total == 159


def test_category_tally_reproduces_reference_counts():
    graph = registry.load_registry(fixtures.registry_snapshot())
    tally = registry.category_tally(graph)
    assert tally == dict(sorted(fixtures.CATEGORY_COUNTS.items()))
    assert len(tally) == 22
    assert tally["Crypto"] == 42
    assert tally["Non-Cryptographic Hash"] == 20
    assert tally["Serialization"] == 11
    assert sum(tally.values()) == 159


def test_category_tally_edge_cases():
    assert registry.category_tally(registry.load_registry(_snap(A=[]))) == {}
    snap = {
        "packages": [
            {"name": "a", "version": "1", "deps": [], "status": "ported", "category": "Crypto"},
            {"name": "b", "version": "1", "deps": [], "status": "ported", "category": "Crypto"},
        ]
    }
    assert registry.category_tally(registry.load_registry(snap)) == {"Crypto": 2}


def test_coverage_top20_and_top100():
    snap = fixtures.registry_snapshot()
    graph = registry.load_registry(snap)
    ranked = fixtures.ranked_top100(snap)

    top20 = registry.coverage_report(graph, ranked, 20)
    assert top20.availability_rate == pytest.approx(0.90)
    assert top20.not_ported == 0
    assert top20.inapplicable == 2

    top100 = registry.coverage_report(graph, ranked, 100)
    assert top100.ported + top100.directly_usable == 60
    assert top100.not_ported == 9
    assert top100.inapplicable == 31


def test_coverage_degenerate_and_out_of_range():
    graph = registry.load_registry(_snap(A=[]))
    empty = registry.coverage_report(graph, ["A"], 0)
    assert (empty.total, empty.availability_rate) == (0, 0.0)
    with pytest.raises(RegistryError) as exc:
        registry.coverage_report(graph, ["A"], 2)
    assert exc.value.code == "top_n_out_of_range"
    with pytest.raises(RegistryError) as exc:
        registry.coverage_report(graph, ["B"], 1)
    assert exc.value.code == "unknown_package"


def _manifest(pid, text, **meta):
    base = {"has_description": True, "has_docs": True, "active_commits": True, "is_educational": False}
    base.update(meta)
    return {"id": pid, "manifest_text": text, **base}


def test_find_dependents_screening():
    rows = [
        _manifest("wallet", '[dependencies]\nrustls = { git = "https://github.com/org-keyword/rustls" }'),
        _manifest("course", 'ring = { git = "https://github.com/org-keyword/ring" }', is_educational=True),
        _manifest("stale", 'x = { git = "https://github.com/org-keyword/x" }', active_commits=False),
        _manifest("plain", 'serde = "1.0"'),
    ]
    manifests = registry.parse_manifests(rows)
    assert registry.find_dependents(manifests, "org-keyword") == ["wallet"]
    assert registry.find_dependents(manifests, "nothing-matches") == []


def test_find_dependents_counts_libraries():
    text = "\n".join(
        [
            'a = { git = "https://github.com/sgx-chain/rustls.git" }',
            'b = { git = "https://github.com/sgx-chain/ring" }',
            'c = { git = "https://github.com/sgx-chain/ring" }',
        ]
    )
    found = registry.find_dependents_detailed(registry.parse_manifests([_manifest("chain", text)]), "sgx-chain")
    assert found[0].libraries == ("ring", "rustls")
    assert found[0].dependency_count == 2


def test_find_dependents_rejects_empty_keyword():
    with pytest.raises(RegistryError):
        registry.find_dependents([], "")


@pytest.mark.parametrize(
    "flags,score,hint",
    [
        ({}, 0, False),
        ({"irreplaceable_dependency": True, "high_quality": True}, 2, True),
        ({"api_stable": True}, 1, False),
        (dict.fromkeys(registry.ADMISSION_CRITERIA, True), 4, True),
    ],
)
def test_admission_check(flags, score, hint):
    report = registry.admission_check(registry.AdmissionCandidate(**flags))
    assert report.score == score
    assert report.admitted_hint is hint
    assert report.to_json()["advisory"] is True


def test_admission_check_is_monotone():
    for bits in itertools.product([False, True], repeat=4):
        candidate = registry.AdmissionCandidate(*bits)
        report = registry.admission_check(candidate)
        assert report.score == sum(bits)
        assert report.admitted_hint == (sum(bits) >= registry.ADMISSION_THRESHOLD)
