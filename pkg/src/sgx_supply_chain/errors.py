# SGX Supply Chain Toolkit
# File: errors.py
# Version: v1

"""Exception hierarchy shared by every toolkit module.

Each error carries a stable ``code`` string and renders to the structured
error shape used on the command line::

    {"ok": false, "error": {"code": "...", "message": "...", "details": {...}}}

Findings (plan aborts, merge escalations, SVN violations, audit warnings) are
*values*, not errors; only broken inputs and violated preconditions raise.
"""

from __future__ import annotations

from typing import Any, Dict, Optional

__all__ = [
    "ToolkitError",
    "ConfigError",
    "DocumentError",
    "StoreError",
    "RegistryError",
    "RepoError",
    "SchedulerError",
    "CiError",
    "SvnError",
    "AuditError",
]


class ToolkitError(Exception):
    """Base class for every error the toolkit raises on purpose."""

    code: str = "toolkit_error"

    def __init__(self, message: str, *, code: Optional[str] = None, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        if code is not None:
            self.code = code
        self.message = message
        self.details: Dict[str, Any] = dict(details or {})

    def as_error(self) -> Dict[str, Any]:
        err: Dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details:
            err["details"] = self.details
        return {"ok": False, "error": err}


class ConfigError(ToolkitError):
    code = "config_error"


class DocumentError(ToolkitError):
    """An input document failed schema validation or could not be parsed."""

    code = "invalid_document"

    def __init__(self, message: str, *, field: Optional[str] = None, source: Optional[str] = None) -> None:
        details: Dict[str, Any] = {}
        if field is not None:
            details["field"] = field
        if source is not None:
            details["source"] = source
        super().__init__(message, details=details)
        self.field = field


class StoreError(ToolkitError):
    """``io_failure`` or ``schema_mismatch``."""

    code = "io_failure"


class RegistryError(ToolkitError):
    """``duplicate_name``, ``unresolved_dependency``, ``cycle_detected``,
    ``unknown_package``, ``top_n_out_of_range``, ``invalid_record``."""

    code = "registry_error"


class RepoError(ToolkitError):
    """``corrupt_repo`` or ``stale_escalation``."""

    code = "corrupt_repo"


class SchedulerError(ToolkitError):
    """``duplicate_patch_id``, ``missing_repo``, ``nothing_pending``, ``clock_regression``."""

    code = "scheduler_error"


class CiError(ToolkitError):
    """``empty_axis``, ``duplicate_axis_value``, ``runner_unavailable``, ``invalid_threshold``."""

    code = "ci_error"


class SvnError(ToolkitError):
    code = "retire_unknown_version"


class AuditError(ToolkitError):
    """``unknown_callee``, ``duplicate_function``, ``missing_sensitivity``."""

    code = "audit_error"
