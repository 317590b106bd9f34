# SGX Supply Chain Toolkit
# File: cli/_gated.py
# Version: v1

"""Per-command interceptor chain: audit start → command → render → audit commit.

Every command returns a :class:`CommandResult`; the wrapper owns printing and
the exit status so command bodies never touch stdout or ``sys.exit``:

- ``0``: the command ran and found nothing to report;
- ``1``: findings (plan abort, escalation, queued review, SVN violation,
  audit warnings, failed pipelines);
- ``2``: the invocation itself was broken (unreadable or invalid input,
  unknown package, missing repository, bad configuration).

Machine output goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import functools
import json
import logging
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, TextIO

from ..audit import AuditLog
from ..errors import ToolkitError
from ._metadata import CommandMetadata

__all__ = ["CommandResult", "wrap_command", "EXIT_OK", "EXIT_FINDINGS", "EXIT_ERROR", "render_json"]

log = logging.getLogger("sgx_supply_chain.cli")

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_ERROR = 2


@dataclass
class CommandResult:
    payload: Any
    findings: bool = False
    text: Optional[str] = None


def render_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)


def _named_args(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if not k.startswith("_") and not callable(v)}


def wrap_command(
    meta: CommandMetadata,
    fn: Callable[[Any, argparse.Namespace], CommandResult],
    *,
    audit_log: AuditLog,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> Callable[[Any, argparse.Namespace], int]:
    """Return a callable that runs ``fn`` and yields the process exit code."""

    @functools.wraps(fn)
    def wrapped(ctx: Any, args: argparse.Namespace) -> int:
        out = stdout or sys.stdout
        err = stderr or sys.stderr
        rec = audit_log.start(command=meta.name, state_dir=ctx.config.state_dir, args=_named_args(args))
        try:
            result = fn(ctx, args)
        except ToolkitError as exc:
            log.debug("%s failed: %s", meta.name, exc.code)
            err.write(render_json(exc.as_error()) + "\n")
            audit_log.commit(rec, outcome="error", exit_code=EXIT_ERROR, error_code=exc.code)
            return EXIT_ERROR
        except ValueError as exc:
            err.write(render_json({"ok": False, "error": {"code": "invalid_argument", "message": str(exc)}}) + "\n")
            audit_log.commit(rec, outcome="error", exit_code=EXIT_ERROR, error_code="invalid_argument")
            return EXIT_ERROR

        if ctx.format == "text" and result.text is not None:
            out.write(result.text if result.text.endswith("\n") or not result.text else result.text + "\n")
        else:
            out.write(render_json(result.payload) + "\n")
        code = EXIT_FINDINGS if result.findings else EXIT_OK
        audit_log.commit(rec, outcome="findings" if result.findings else "ok", exit_code=code)
        return code

    wrapped.__wrapped__ = fn  # type: ignore[attr-defined]
    return wrapped
