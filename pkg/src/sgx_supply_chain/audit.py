# SGX Supply Chain Toolkit
# File: audit.py
# Version: v1

"""Operator audit trail: one JSON line per CLI command.

Enabled with ``SGXSC_AUDIT_ENABLED=1``. Records go to ``<state>/audit.log``
unless ``SGXSC_AUDIT_LOG_PATH`` points elsewhere::

    {"args_fingerprint": "sha256:...", "command": "scheduler step",
     "duration_ms": 41, "exit_code": 1, "outcome": "findings",
     "state_dir_hash": "sha256:...", "ts": "2026-05-30T15:42:01.314000Z"}

``error_code`` is added when the command failed. Argument values and the state
directory path only ever appear as digests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import ToolkitConfig
from .errors import StoreError
from .store import AppendLog

__all__ = ["AuditRecord", "AuditLog", "fingerprint", "hash_path", "audit_log_for"]

log = logging.getLogger("sgx_supply_chain.audit")

OUTCOMES = frozenset({"ok", "findings", "error"})


def _digest(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:32]


def fingerprint(value: Any) -> str:
    """Digest of ``value`` that is independent of dict key order."""
    return _digest(json.dumps(value, sort_keys=True, separators=(",", ":"), default=str))


def hash_path(path: Optional[Path]) -> Optional[str]:
    return None if path is None else _digest(str(Path(path).resolve()))


@dataclass(frozen=True)
class AuditRecord:
    """A command that has started but not yet been committed."""

    command: str
    args_fingerprint: Optional[str]
    state_dir_hash: Optional[str]
    started: float

    def finish(self, outcome: str, exit_code: int, error_code: Optional[str]) -> Dict[str, Any]:
        if outcome not in OUTCOMES:
            raise ValueError(f"unknown audit outcome {outcome!r}")
        entry: Dict[str, Any] = {
            "ts": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
            "command": self.command,
            "duration_ms": int((time.perf_counter() - self.started) * 1000),
            "outcome": outcome,
            "exit_code": exit_code,
            "args_fingerprint": self.args_fingerprint,
            "state_dir_hash": self.state_dir_hash,
        }
        if error_code:
            entry["error_code"] = error_code
        return entry


class AuditLog:
    def __init__(self, *, path: Path, enabled: bool = False) -> None:
        self.path = Path(path)
        self.enabled = enabled
        self._log = AppendLog(self.path)

    def start(self, *, command: str, state_dir: Optional[Path], args: Any) -> AuditRecord:
        return AuditRecord(
            command=command,
            args_fingerprint=None if args is None else fingerprint(args),
            state_dir_hash=hash_path(state_dir),
            started=time.perf_counter(),
        )

    def commit(
        self, record: AuditRecord, *, outcome: str, exit_code: int, error_code: Optional[str] = None
    ) -> Optional[Dict[str, Any]]:
        """Append the finished record; returns it, or ``None`` while disabled.

        A write failure is logged and otherwise ignored: the command's exit
        status is already decided.
        """
        if not self.enabled:
            return None
        entry = record.finish(outcome, exit_code, error_code)
        try:
            self._log.append(entry)
        except StoreError as exc:
            log.warning("audit record for %s not written: %s", record.command, exc.message)
        return entry

    def tail(self, *, limit: int = 50) -> List[Dict[str, Any]]:
        """Last ``limit`` parseable records; unreadable lines are skipped."""
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError:
            return []
        entries: List[Dict[str, Any]] = []
        for line in text.splitlines():
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError:
                continue
        return entries[-limit:] if limit > 0 else []


def audit_log_for(config: ToolkitConfig) -> AuditLog:
    return AuditLog(path=config.audit_log_path or config.state_dir / "audit.log", enabled=config.audit_enabled)
