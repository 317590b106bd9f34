# SGX Supply Chain Toolkit
# File: tests/fixtures.py
# Version: v1

"""Fixture builders shared by the test modules.

The registry fixture has 159 ported packages whose port closures and
functionality categories reproduce the reference supply-chain statistics,
plus unported packages for the popularity rankings.
"""

from __future__ import annotations

from typing import Any, Dict, List, Sequence, Tuple

from sgx_supply_chain.ci import WEEK_SECONDS, InvocationAttempt
from sgx_supply_chain.merge import FileTree

# -- Registry ----------------------------------------------------------------

CLOSURE_HISTOGRAM = {"0": 45, "1": 16, "2": 19, "3": 19, "4": 13, "5": 21, "6-10": 12, "11-20": 12, ">=21": 2}

CATEGORY_COUNTS = {
    "String Manipulation": 7,
    "Data Structure and Algorithm": 6,
    "Parsing": 3,
    "Binary Data Processing": 10,
    "Time and Date": 2,
    "Compression": 5,
    "Logging": 2,
    "Serialization": 11,
    "Randomness": 3,
    "Non-Cryptographic Hash": 20,
    "Image Processing": 5,
    "Crypto": 42,
    "Network": 7,
    "Safe Integer Processing": 8,
    "I/O": 2,
    "Scientific Computation": 2,
    "WebAssembly": 3,
    "Machine Learning": 1,
    "Blockchain Utils": 8,
    "Threading": 2,
    "Database": 2,
    "Miscellaneous": 8,
}

CHAIN_LENGTH = 23

# Leaves hang off the chain: a leaf depending on chain[k - 1] has closure size k.
_LEAF_SIZES: List[int] = (
    [0] * 44 + [1] * 15 + [2] * 18 + [3] * 18 + [4] * 12 + [5] * 20 + [6, 7, 8, 9, 10, 6, 7] + [12, 15]
)


def _chain_name(i: int) -> str:
    return f"chain-{i:02d}"


def registry_snapshot() -> Dict[str, Any]:
    """159 ported packages, 16 directly usable (one of them meta), 31 inapplicable, 9 candidates."""
    ported: List[Tuple[str, List[str]]] = []
    for i in range(CHAIN_LENGTH):
        deps = [_chain_name(i - 1)] if i else []
        ported.append((_chain_name(i), deps + ["derive-helpers"]))
    for j, size in enumerate(_LEAF_SIZES):
        deps = [_chain_name(size - 1)] if size else []
        if j % 3 == 0:
            deps.append("cfg-util")
        ported.append((f"leaf-{j:03d}", deps))
    assert len(ported) == 159

    categories = [name for name, count in CATEGORY_COUNTS.items() for _ in range(count)]
    packages: List[Dict[str, Any]] = []
    for (name, deps), category in zip(sorted(ported), categories):
        packages.append({"name": name, "version": "1.0.0", "deps": deps, "status": "ported", "category": category})

    packages.append({"name": "derive-helpers", "version": "0.3.0", "deps": [], "status": "directly_usable", "is_meta": True})
    packages.append({"name": "cfg-util", "version": "0.1.10", "deps": [], "status": "directly_usable"})
    for i in range(14):
        packages.append({"name": f"usable-{i:02d}", "version": "1.0.0", "deps": [], "status": "directly_usable"})
    for i in range(31):
        packages.append({"name": f"hostonly-{i:02d}", "version": "1.0.0", "deps": [], "status": "inapplicable"})
    for i in range(9):
        packages.append({"name": f"wanted-{i:02d}", "version": "1.0.0", "deps": ["cfg-util"], "status": "candidate"})
    return {"packages": packages}


def ported_names(snapshot: Dict[str, Any]) -> List[str]:
    return sorted(p["name"] for p in snapshot["packages"] if p["status"] == "ported")


def ranked_top100(snapshot: Dict[str, Any]) -> List[str]:
    """Popularity ranking: top 20 is 18 available + 2 inapplicable; top 100 is 60 / 31 / 9."""
    ported = ported_names(snapshot)
    usable = ["derive-helpers", "cfg-util"] + [f"usable-{i:02d}" for i in range(14)]
    hostonly = [f"hostonly-{i:02d}" for i in range(31)]
    wanted = [f"wanted-{i:02d}" for i in range(9)]
    top20 = ported[:14] + usable[:4] + hostonly[:2]
    rest = ported[14:44] + usable[4:16] + wanted + hostonly[2:31]
    ranked = top20 + rest
    assert len(ranked) == 100 and len(set(ranked)) == 100
    return ranked


# -- CI history --------------------------------------------------------------

WEEKLY_TOTALS = [
    72, 19, 15, 18, 20, 18, 14, 18, 21, 21, 23, 21, 21, 21, 21, 23, 68, 63, 24, 24, 78, 51, 32, 32,
    35, 49, 154, 542, 302, 429, 631, 1001, 912, 470, 526, 523, 498, 498, 569, 571, 534, 522, 581,
    800, 835, 723, 504,
]
WEEKLY_FAILED = [
    36, 4, 1, 1, 7, 4, 0, 2, 6, 8, 8, 7, 8, 9, 7, 12, 43, 35, 12, 9, 42, 10, 11, 8, 14, 18, 41, 151,
    47, 120, 159, 249, 230, 48, 91, 67, 20, 12, 84, 154, 11, 11, 80, 192, 109, 134, 69,
]


def weekly_history(epoch: int = 0) -> List[InvocationAttempt]:
    """Attempts spread over each week so that week ``w`` reproduces the reference counts."""
    out: List[InvocationAttempt] = []
    for week, (total, failed) in enumerate(zip(WEEKLY_TOTALS, WEEKLY_FAILED), start=1):
        start = epoch + (week - 1) * WEEK_SECONDS
        step = WEEK_SECONDS // total
        for i in range(total):
            out.append(InvocationAttempt(library=f"lib-{i % 159:03d}", when=start + i * step, failed=i < failed))
    return out


# -- Trees and repositories --------------------------------------------------


def tree(**files: Sequence[str] | str) -> FileTree:
    """``tree(**{"src/lib.rs": "a\\nb"})`` or with explicit line lists."""
    out: Dict[str, Tuple[str, ...]] = {}
    for path, content in files.items():
        out[path] = tuple(content.split("\n")) if isinstance(content, str) else tuple(content)
    return FileTree(out)


def lines_tree(mapping: Dict[str, Sequence[str]]) -> FileTree:
    return FileTree({path: tuple(lines) for path, lines in mapping.items()})


BASE_LINES = ["fn main() {", "    let x = 1;", "    let y = 2;", "    println!(x + y);", "    let z = 3;", "}"]
