# SGX Supply Chain Toolkit
# File: runners.py
# Version: v1

"""Pluggable CI runners.

A runner maps ``(library, pipeline config)`` to a :class:`RawOutcome`. The
toolkit never builds anything itself; operators point ``SGXSC_CI_RUNNER`` at
a ``module:attribute`` that provides one:

    SGXSC_CI_RUNNER="mycompany.ci:DockerRunner"

The attribute may be a class (instantiated without arguments), a factory
function returning a runner, or a ready runner object. Anything with a
``run(library, config)`` method works.

:class:`ScriptedRunner` is the deterministic double used by tests and by
``ci run --script``: a JSON document lists the outcomes each library returns
per pipeline label (``"*"`` for every pipeline)::

    {"ring": {"*": ["fail:network", "pass"]},
     "libc": {"xargo/ubuntu-18.04/release": ["fail:external"]}}

Outcomes are consumed in order; the last one repeats.
"""

from __future__ import annotations

import importlib
import inspect
import logging
from dataclasses import dataclass
from threading import Lock
from typing import Any, Dict, List, Mapping, Optional, Protocol, Sequence, Tuple

from . import schemas
from .errors import CiError

__all__ = ["RawOutcome", "CiRunner", "RunnerStatus", "ScriptedRunner", "load_runner", "get_runner_status"]

logger = logging.getLogger("sgx_supply_chain.runners")


@dataclass(frozen=True)
class RawOutcome:
    passed: bool
    kind: Optional[str] = None  # network | external | deterministic | anything else

    @classmethod
    def parse(cls, token: str) -> "RawOutcome":
        if token == "pass":
            return cls(True)
        _, _, kind = token.partition(":")
        return cls(False, kind or "deterministic")


class CiRunner(Protocol):
    def run(self, library: str, config: Any) -> RawOutcome: ...


@dataclass
class RunnerStatus:
    name: str
    ok: bool
    error: Optional[str] = None


_RUNNER_STATUS: List[RunnerStatus] = []


def get_runner_status() -> List[Dict[str, Any]]:
    return [{"name": s.name, "ok": s.ok, "error": s.error} for s in list(_RUNNER_STATUS)]


def _unavailable(name: str, message: str) -> CiError:
    _RUNNER_STATUS.append(RunnerStatus(name=name, ok=False, error=message))
    logger.warning("CI runner '%s' unavailable: %s", name, message)
    return CiError(f"CI runner '{name}' unavailable: {message}", code="runner_unavailable", details={"runner": name})


def load_runner(spec: Optional[str]) -> CiRunner:
    """Import and build the runner named by ``module:attribute``."""
    if not spec or not spec.strip():
        raise _unavailable("<unset>", "no runner configured (set SGXSC_CI_RUNNER or pass --script)")
    name = spec.strip()
    module_name, _, attr = name.partition(":")
    try:
        module = importlib.import_module(module_name)
        target = getattr(module, attr or "runner")
    except Exception as exc:
        raise _unavailable(name, str(exc)) from exc

    try:
        runner = target() if inspect.isclass(target) or (callable(target) and not hasattr(target, "run")) else target
    except Exception as exc:
        raise _unavailable(name, f"construction failed: {exc}") from exc
    if not callable(getattr(runner, "run", None)):
        raise _unavailable(name, "object has no run(library, config) method")

    _RUNNER_STATUS.append(RunnerStatus(name=name, ok=True))
    logger.info("Loaded CI runner: %s", name)
    return runner


class ScriptedRunner:
    """Replays scripted outcomes; thread-safe."""

    def __init__(self, script: Mapping[str, Mapping[str, Sequence[str]]], *, default: str = "pass") -> None:
        schemas.validate(dict(script), schemas.CI_SCRIPT, source="ci script")
        self._script = {lib: {label: list(seq) for label, seq in per.items()} for lib, per in script.items()}
        self._default = RawOutcome.parse(default)
        self._cursor: Dict[Tuple[str, str], int] = {}
        self._lock = Lock()
        self.calls: List[Tuple[str, str]] = []

    def _sequence(self, library: str, label: str) -> Tuple[str, Sequence[str]]:
        per = self._script.get(library, {})
        if label in per:
            return label, per[label]
        return "*", per.get("*", ())

    def run(self, library: str, config: Any) -> RawOutcome:
        label = getattr(config, "label", str(config))
        with self._lock:
            self.calls.append((library, label))
            _, seq = self._sequence(library, label)
            if not seq:
                return self._default
            # "*" sequences advance per pipeline, not per library.
            cursor_key = (library, label)
            index = self._cursor.get(cursor_key, 0)
            self._cursor[cursor_key] = index + 1
            return RawOutcome.parse(seq[min(index, len(seq) - 1)])

    def calls_for(self, library: str, label: Optional[str] = None) -> int:
        return sum(1 for lib, lab in self.calls if lib == library and (label is None or lab == label))
