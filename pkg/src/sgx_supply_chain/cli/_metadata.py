# SGX Supply Chain Toolkit
# File: cli/_metadata.py
# Version: v1

"""Per-command descriptors.

Drives the argparse help text, the audit record's ``command`` field and the
read-only/mutating split shown in ``--help``. Mutating commands write under
the state directory; every other command only reads its input files.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

__all__ = ["CommandMetadata", "COMMAND_REGISTRY", "iter_commands", "commands_in"]


@dataclass(frozen=True)
class CommandMetadata:
    name: str  # full command path, e.g. "scheduler step"
    group: str
    description: str
    mutating: bool = False

    @property
    def leaf(self) -> Optional[str]:
        """Subcommand under ``group``; ``None`` for top-level commands."""
        parts = self.name.split(" ", 1)
        return parts[1] if len(parts) == 2 else None


_COMMANDS: List[CommandMetadata] = [
    # === registry ===
    CommandMetadata("registry report", "registry", "Availability of the top-N most popular packages."),
    CommandMetadata("registry histogram", "registry", "Distribution of port-closure sizes over a set of roots."),
    CommandMetadata("registry dependents", "registry", "Screened projects whose manifests reference the supply chain."),
    CommandMetadata("registry tally", "registry", "Ported packages per functionality category."),
    CommandMetadata("registry admit", "registry", "Advisory admission checklist for a candidate library."),
    # === plan ===
    CommandMetadata("plan", "plan", "Port plan for one root package, or the dependency that blocks it."),
    # === repo ===
    CommandMetadata("repo init", "repo", "Create a library repository from base/upstream/fork trees.", mutating=True),
    CommandMetadata("repo advance", "repo", "Commit a new tree on the upstream or fork line.", mutating=True),
    CommandMetadata("repo resolve", "repo", "Record a human conflict resolution for a pending escalation.", mutating=True),
    # === scheduler ===
    CommandMetadata("scheduler ingest", "scheduler", "Add upstream patches to the per-library caches.", mutating=True),
    CommandMetadata("scheduler step", "scheduler", "Evaluate merge triggers once for every library.", mutating=True),
    CommandMetadata("scheduler approve", "scheduler", "Release a queued review entry into the merge path.", mutating=True),
    CommandMetadata("scheduler policy", "scheduler", "Libraries under mandatory manual review."),
    CommandMetadata("scheduler status", "scheduler", "Cache sizes, review queue and pending escalations."),
    # === ci ===
    CommandMetadata("ci run", "ci", "Run the pipeline matrix for one library.", mutating=True),
    CommandMetadata("ci sweep", "ci", "Daily sweep over every library with mass-failure detection.", mutating=True),
    CommandMetadata("ci report", "ci", "Weekly attempt and failure counts."),
    CommandMetadata("ci breakdown", "ci", "Failures per category and outage recovery times."),
    # === svn ===
    CommandMetadata("svn check", "svn", "Check that live builds admit a linear security version numbering."),
    # === audit ===
    CommandMetadata("audit", "audit", "Untrusted resources reachable from enclave entry points."),
]

COMMAND_REGISTRY: Dict[str, CommandMetadata] = {meta.name: meta for meta in _COMMANDS}


def iter_commands() -> Iterator[Tuple[str, CommandMetadata]]:
    """(name, metadata) in registration order."""
    for meta in _COMMANDS:
        yield meta.name, meta


def commands_in(group: str) -> List[CommandMetadata]:
    return [meta for meta in _COMMANDS if meta.group == group]
