# SGX Supply Chain Toolkit
# File: policy.py
# Version: v1

"""Mandatory manual review gating.

Libraries of extreme security significance never take the automatic merge
path: every upstream patch has to be explicitly reviewed by an assigned
maintainer. The default roster is :data:`MANDATORY_REVIEW`; operators extend
or replace it through ``manual_review`` in ``scheduler.toml``.

The gate is intentionally simple. The scheduler asks :func:`permits` for
every triggered library and routes according to the returned
:class:`PolicyDecision`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable

__all__ = ["Route", "PolicyDecision", "MANDATORY_REVIEW", "permits", "disclosure"]


class Route(str, Enum):
    AUTO_MERGE = "auto_merge"
    MANUAL_REVIEW = "manual_review"


#: Library -> functionality, for the libraries whose updates always need a human.
MANDATORY_REVIEW: Dict[str, str] = {
    "rustls": "Transport Layer Security (TLS) protocol",
    "webpki": "X.509 certificate validation",
    "ring": "Cryptographic algorithms",
    "cryptocorrosion": "Cryptographic algorithms",
    "wasmi": "WebAssembly interpreter",
}


@dataclass(frozen=True)
class PolicyDecision:
    """Result of a routing check."""

    library: str
    route: Route
    reason: str

    @property
    def auto_merge_allowed(self) -> bool:
        return self.route is Route.AUTO_MERGE


def permits(library: str, *, manual_review: Iterable[str]) -> PolicyDecision:
    """Decide whether ``library`` may be merged without a reviewer."""
    if library in set(manual_review):
        functionality = MANDATORY_REVIEW.get(library)
        detail = f" ({functionality})" if functionality else ""
        return PolicyDecision(
            library,
            Route.MANUAL_REVIEW,
            f"'{library}'{detail} requires mandatory manual review; automatic merging is disabled.",
        )
    return PolicyDecision(library, Route.AUTO_MERGE, "Automatic merge permitted.")


def disclosure(manual_review: Iterable[str]) -> Dict[str, Any]:
    """Snapshot of the review posture for ``scheduler policy``."""
    roster = sorted(set(manual_review))
    return {
        "manual_review": [
            {"library": name, "functionality": MANDATORY_REVIEW.get(name, "operator-configured")}
            for name in roster
        ],
        "defaults_overridden": set(roster) != set(MANDATORY_REVIEW),
        "missing_defaults": sorted(set(MANDATORY_REVIEW) - set(roster)),
    }
