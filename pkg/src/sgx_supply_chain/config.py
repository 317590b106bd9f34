# SGX Supply Chain Toolkit
# File: config.py
# Version: v1

"""Configuration loading for the SGX Supply Chain Toolkit.

Two layers:

- :class:`ToolkitConfig`: process-level knobs read from ``SGXSC_*``
  environment variables (a ``.env`` file is honoured by the CLI boot path).
- :class:`SchedulerConfig` / :class:`CiConfig`: policy values read from the
  ``scheduler.toml`` file (top-level keys and the ``[ci]`` section), validated
  with pydantic.
"""

from __future__ import annotations

import os
import tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .policy import MANDATORY_REVIEW

__all__ = [
    "DAY_SECONDS",
    "DEFAULT_KEYWORDS",
    "ToolkitConfig",
    "SchedulerConfig",
    "CiConfig",
    "load_settings",
    "settings_from_mapping",
]

DAY_SECONDS = 86400
DEFAULT_KEYWORDS = ("fix", "bug", "issue", "release")


_TRUE_WORDS = frozenset({"1", "true", "yes", "on"})


def _parse_bool_env(name: str, default: bool = False) -> bool:
    """``1/true/yes/on`` (any case) is true; unset keeps ``default``."""
    raw = os.getenv(name)
    return default if raw is None else raw.strip().lower() in _TRUE_WORDS


def _parse_int_env(name: str, default: int, *, min_value: int | None = None, max_value: int | None = None) -> int:
    """Integer from the environment, clamped to the bounds; unparseable means ``default``."""
    try:
        value = int((os.getenv(name) or "").strip() or default)
    except ValueError:
        value = default
    if min_value is not None:
        value = max(value, min_value)
    if max_value is not None:
        value = min(value, max_value)
    return value


@dataclass
class ToolkitConfig:
    """Process-level settings."""

    state_dir: Path
    config_path: Path
    log_level: str = "WARNING"
    audit_enabled: bool = False
    audit_log_path: Optional[Path] = None
    ci_runner: Optional[str] = None
    ci_max_parallel: int = 4

    @classmethod
    def from_env(cls, *, state_dir: Optional[str] = None) -> "ToolkitConfig":
        """Create configuration from environment variables.

        ``state_dir`` (from ``--state-dir``) wins over ``SGXSC_STATE_DIR``.
        """
        base = Path(state_dir or os.getenv("SGXSC_STATE_DIR") or ".sgxsc-state")
        config_path = Path(os.getenv("SGXSC_CONFIG") or (base / "scheduler.toml"))

        level = (os.getenv("SGXSC_LOG_LEVEL") or "WARNING").strip().upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            level = "WARNING"

        audit_override = os.getenv("SGXSC_AUDIT_LOG_PATH")
        return cls(
            state_dir=base,
            config_path=config_path,
            log_level=level,
            audit_enabled=_parse_bool_env("SGXSC_AUDIT_ENABLED", default=False),
            audit_log_path=Path(os.path.expanduser(audit_override)) if audit_override else None,
            ci_runner=(os.getenv("SGXSC_CI_RUNNER") or "").strip() or None,
            ci_max_parallel=_parse_int_env("SGXSC_CI_MAX_PARALLEL", default=4, min_value=1, max_value=64),
        )


class SchedulerConfig(BaseModel):
    """Merge scheduler policy.

    ``max_age`` is in seconds; the TOML file may give ``max_age_days`` instead
    (one "month" is 30 days).
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    keywords: FrozenSet[str] = frozenset(DEFAULT_KEYWORDS)
    max_age: int = Field(30 * DAY_SECONDS, gt=0)
    default_capacity: int = Field(10, ge=1, alias="capacity")
    manual_review: FrozenSet[str] = frozenset(MANDATORY_REVIEW)

    @model_validator(mode="before")
    @classmethod
    def _days_to_seconds(cls, data: Any) -> Any:
        if isinstance(data, dict) and "max_age_days" in data:
            data = dict(data)
            days = data.pop("max_age_days")
            if isinstance(days, (int, float)) and not isinstance(days, bool):
                data["max_age"] = int(round(days * DAY_SECONDS))
            else:
                data["max_age"] = days
        return data

    @field_validator("keywords")
    @classmethod
    def _normalise_keywords(cls, value: FrozenSet[str]) -> FrozenSet[str]:
        cleaned = frozenset(k.strip().lower() for k in value)
        if "" in cleaned:
            raise ValueError("keywords must be nonempty words")
        return cleaned


class CiConfig(BaseModel):
    """The ``[ci]`` section: pipeline matrix and failure-handling thresholds."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    package_managers: List[str] = Field(default_factory=lambda: ["cargo", "xargo"])
    os_versions: List[str] = Field(default_factory=lambda: ["ubuntu-16.04", "ubuntu-18.04"])
    build_types: List[str] = Field(default_factory=lambda: ["release", "debug"])
    retry_budget: int = Field(2, ge=0)
    mass_failure_threshold: float = Field(0.25, gt=0, le=1)
    week_epoch: int = 0
    max_parallel: int = Field(4, ge=1, le=64)

    def matrix(self) -> Any:
        from .ci import BuildMatrix  # local import to avoid cycle

        return BuildMatrix(
            package_managers=tuple(self.package_managers),
            os_versions=tuple(self.os_versions),
            build_types=tuple(self.build_types),
        )


def _field_of(exc: ValidationError, prefix: str = "") -> Tuple[str, str]:
    first = exc.errors()[0]
    loc = ".".join(str(p) for p in first.get("loc", ()))
    return (f"{prefix}{loc}" if loc else prefix.rstrip(".") or "<root>"), first.get("msg", "invalid value")


def settings_from_mapping(data: Dict[str, Any]) -> Tuple[SchedulerConfig, CiConfig]:
    raw = dict(data)
    ci_raw = raw.pop("ci", {}) or {}
    try:
        scheduler = SchedulerConfig.model_validate(raw)
    except ValidationError as exc:
        field, msg = _field_of(exc)
        raise ConfigError(f"scheduler config field '{field}': {msg}", details={"field": field}) from exc
    try:
        ci = CiConfig.model_validate(ci_raw)
    except ValidationError as exc:
        field, msg = _field_of(exc, "ci.")
        raise ConfigError(f"scheduler config field '{field}': {msg}", details={"field": field}) from exc
    return scheduler, ci


def load_settings(path: Optional[Path]) -> Tuple[SchedulerConfig, CiConfig]:
    """Read ``scheduler.toml``; a missing file yields the defaults."""
    if path is None or not Path(path).exists():
        return SchedulerConfig(), CiConfig()
    try:
        with Path(path).open("rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", details={"path": str(path)}) from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", details={"path": str(path)}) from exc
    return settings_from_mapping(data)
