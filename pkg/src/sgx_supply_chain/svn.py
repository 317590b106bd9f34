# SGX Supply Chain Toolkit
# File: svn.py
# Version: v1

"""Security Version Number (SVN) soundness checks.

An enclave build is identified by its library security revision and the SGX
SDK's SVN at build time. Build ``a`` is at most as secure as ``b`` when both
components of ``a`` are less than or equal to those of ``b``; that is only a
partial order. Hardware SVNs are one integer, so an assignment is sound
exactly when every live build is comparable with every other live build:

    svn(a) <= svn(b)  <=>  a <= b

Keeping two library revisions alive across an SDK bump produces a pair such
as (rev 1, sdk 0) and (rev 0, sdk 1) that no integer can order correctly.
Keeping only the latest library version alive avoids it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from . import schemas
from .errors import SvnError

__all__ = [
    "LibRelease",
    "SdkBump",
    "Retire",
    "VersionEvent",
    "BuildPoint",
    "SecurityOrder",
    "SvnAssignment",
    "Violation",
    "leq",
    "derive_order",
    "check_linear",
    "enforce_latest_only",
    "parse_events",
]

log = logging.getLogger("sgx_supply_chain.svn")


@dataclass(frozen=True)
class LibRelease:
    library: str
    security_bump: bool = False

    def to_json(self) -> Dict[str, Any]:
        return {"type": "lib_release", "library": self.library, "security_bump": self.security_bump}


@dataclass(frozen=True)
class SdkBump:
    def to_json(self) -> Dict[str, Any]:
        return {"type": "sdk_bump"}


@dataclass(frozen=True)
class Retire:
    library: str
    lib_rev: int

    def to_json(self) -> Dict[str, Any]:
        return {"type": "retire", "library": self.library, "lib_rev": self.lib_rev}


VersionEvent = Union[LibRelease, SdkBump, Retire]


def parse_events(rows: Iterable[Dict[str, Any]]) -> List[VersionEvent]:
    events: List[VersionEvent] = []
    for row in rows:
        schemas.validate(row, schemas.SVN_EVENT, source="svn events")
        kind = row["type"]
        if kind == "lib_release":
            events.append(LibRelease(row["library"], bool(row.get("security_bump", False))))
        elif kind == "sdk_bump":
            events.append(SdkBump())
        else:
            events.append(Retire(row["library"], int(row["lib_rev"])))
    return events


@dataclass(frozen=True)
class BuildPoint:
    library: str
    lib_rev: int
    sdk_svn: int
    live: bool = True

    @property
    def key(self) -> Tuple[int, int]:
        return (self.lib_rev, self.sdk_svn)

    def to_json(self) -> Dict[str, Any]:
        return {"library": self.library, "lib_rev": self.lib_rev, "sdk_svn": self.sdk_svn, "live": self.live}


def leq(a: BuildPoint, b: BuildPoint) -> bool:
    """``a`` is no more secure than ``b``. Builds of different libraries never compare."""
    return a.library == b.library and a.lib_rev <= b.lib_rev and a.sdk_svn <= b.sdk_svn


@dataclass(frozen=True)
class SecurityOrder:
    builds: Tuple[BuildPoint, ...]

    def live(self, library: Optional[str] = None) -> List[BuildPoint]:
        return [b for b in self.builds if b.live and (library is None or b.library == library)]

    def libraries(self) -> List[str]:
        return sorted({b.library for b in self.builds})

    def to_json(self) -> Dict[str, Any]:
        return {"builds": [b.to_json() for b in self.builds]}


def derive_order(events: Iterable[VersionEvent]) -> SecurityOrder:
    """Replay ``events`` into every build point that was ever live.

    The first release of a library is revision 0; a security-bump release
    raises the revision, a plain release rebuilds the current one.
    """
    sdk = 0
    current: Dict[str, int] = {}
    points: Dict[Tuple[str, int, int], bool] = {}

    for event in events:
        if isinstance(event, LibRelease):
            if event.library not in current:
                current[event.library] = 0
            elif event.security_bump:
                current[event.library] += 1
            points[(event.library, current[event.library], sdk)] = True
        elif isinstance(event, SdkBump):
            sdk += 1
            live_versions = sorted({(lib, rev) for (lib, rev, _), alive in points.items() if alive})
            for lib, rev in live_versions:
                points[(lib, rev, sdk)] = True
        elif isinstance(event, Retire):
            matching = [key for key in points if key[0] == event.library and key[1] == event.lib_rev]
            if not matching:
                raise SvnError(
                    f"cannot retire {event.library} rev {event.lib_rev}: never released",
                    code="retire_unknown_version",
                    details={"library": event.library, "lib_rev": event.lib_rev},
                )
            for key in matching:
                points[key] = False
        else:  # pragma: no cover - closed union
            raise TypeError(f"unknown event {event!r}")

    builds = tuple(BuildPoint(lib, rev, s, alive) for (lib, rev, s), alive in sorted(points.items()))
    return SecurityOrder(builds)


@dataclass(frozen=True)
class SvnAssignment:
    table: Dict[BuildPoint, int]

    @property
    def ok(self) -> bool:
        return True

    def to_json(self) -> Dict[str, Any]:
        rows = sorted(self.table.items(), key=lambda kv: (kv[0].library, kv[1], kv[0].key))
        return {"ok": True, "assignment": [{**b.to_json(), "svn": svn} for b, svn in rows]}


@dataclass(frozen=True)
class Violation:
    """Two live builds of one library that no single integer can order."""

    first: BuildPoint
    second: BuildPoint

    @property
    def ok(self) -> bool:
        return False

    @property
    def pair(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        return (self.first.key, self.second.key)

    def to_json(self) -> Dict[str, Any]:
        return {
            "ok": False,
            "library": self.first.library,
            "witness": [self.first.to_json(), self.second.to_json()],
            "reason": (
                f"{self.first.library}: build (rev {self.first.lib_rev}, sdk {self.first.sdk_svn}) and "
                f"(rev {self.second.lib_rev}, sdk {self.second.sdk_svn}) are incomparable; "
                "no linear SVN can keep sealed data compatible for both"
            ),
        }


def check_linear(order: SecurityOrder) -> Union[SvnAssignment, Violation]:
    """Rank live builds per library, or return the first incomparable pair.

    Equal build points share a rank. The witness lists the build with the
    higher library revision first.
    """
    table: Dict[BuildPoint, int] = {}
    for library in order.libraries():
        chain = sorted(order.live(library), key=lambda b: b.key)
        for lower, upper in zip(chain, chain[1:]):
            if not leq(lower, upper):
                first, second = sorted((lower, upper), key=lambda b: (-b.lib_rev, b.sdk_svn))
                log.info("svn violation in %s: %s vs %s", library, first.key, second.key)
                return Violation(first, second)
        rank = -1
        previous: Optional[BuildPoint] = None
        for build in chain:
            if previous is None or build.key != previous.key:
                rank += 1
            table[build] = rank
            previous = build
    return SvnAssignment(table)


def enforce_latest_only(events: Iterable[VersionEvent]) -> List[VersionEvent]:
    """Retire the previous revision right after every security-bump release.

    A stream that already retires it in the next event is left unchanged, so
    the rewrite is idempotent.
    """
    source = list(events)
    out: List[VersionEvent] = []
    current: Dict[str, int] = {}
    for index, event in enumerate(source):
        out.append(event)
        if not isinstance(event, LibRelease):
            continue
        if event.library not in current:
            current[event.library] = 0
            continue
        if not event.security_bump:
            continue
        previous = current[event.library]
        current[event.library] = previous + 1
        retire = Retire(event.library, previous)
        following = source[index + 1] if index + 1 < len(source) else None
        if following != retire:
            out.append(retire)
    return out
