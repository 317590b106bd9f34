# SGX Supply Chain Toolkit
# File: models.py
# Version: v1

"""Enumerations shared across modules.

``ResourceKind`` is the closed set of untrusted resources; the port planner
and the enclave auditor both speak it, so it lives here rather than in either.
"""

from __future__ import annotations

from enum import Enum

__all__ = ["PackageStatus", "ResourceKind"]


class PackageStatus(str, Enum):
    """SGX compatibility of a package in a registry snapshot."""

    PORTED = "ported"
    DIRECTLY_USABLE = "directly_usable"
    INAPPLICABLE = "inapplicable"
    CANDIDATE = "candidate"


class ResourceKind(str, Enum):
    """Resources fetched from outside the enclave trust boundary."""

    FILE_IO = "file_io"
    TIME = "time"
    RANDOMNESS = "randomness"
    THREAD_SPAWN = "thread_spawn"
    NETWORK = "network"
    ENV_VAR = "env_var"
    PROCESS_SPAWN = "process_spawn"
