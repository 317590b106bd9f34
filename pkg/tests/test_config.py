# SGX Supply Chain Toolkit
# File: tests/test_config.py
# Version: v1

from __future__ import annotations

from pathlib import Path

import pytest

from sgx_supply_chain.config import DAY_SECONDS, CiConfig, SchedulerConfig, ToolkitConfig, load_settings, settings_from_mapping
from sgx_supply_chain.errors import ConfigError, DocumentError, RegistryError
from sgx_supply_chain.policy import MANDATORY_REVIEW


def _clear(monkeypatch) -> None:
    for name in (
        "SGXSC_STATE_DIR",
        "SGXSC_CONFIG",
        "SGXSC_LOG_LEVEL",
        "SGXSC_AUDIT_ENABLED",
        "SGXSC_AUDIT_LOG_PATH",
        "SGXSC_CI_RUNNER",
        "SGXSC_CI_MAX_PARALLEL",
    ):
        monkeypatch.delenv(name, raising=False)


def test_toolkit_config_defaults(monkeypatch):
    _clear(monkeypatch)
    cfg = ToolkitConfig.from_env()
    assert cfg.state_dir == Path(".sgxsc-state")
    assert cfg.config_path == Path(".sgxsc-state") / "scheduler.toml"
    assert cfg.log_level == "WARNING"
    assert cfg.audit_enabled is False
    assert cfg.ci_runner is None
    assert cfg.ci_max_parallel == 4


def test_toolkit_config_flag_wins_over_env(monkeypatch, tmp_path):
    _clear(monkeypatch)
    monkeypatch.setenv("SGXSC_STATE_DIR", str(tmp_path / "env"))
    cfg = ToolkitConfig.from_env(state_dir=str(tmp_path / "flag"))
    assert cfg.state_dir == tmp_path / "flag"


def test_toolkit_config_parses_and_clamps(monkeypatch):
    _clear(monkeypatch)
    monkeypatch.setenv("SGXSC_AUDIT_ENABLED", "yes")
    monkeypatch.setenv("SGXSC_LOG_LEVEL", "debug")
    monkeypatch.setenv("SGXSC_CI_MAX_PARALLEL", "500")
    monkeypatch.setenv("SGXSC_CI_RUNNER", "  mycompany.ci:Runner ")
    cfg = ToolkitConfig.from_env()
    assert cfg.audit_enabled is True
    assert cfg.log_level == "DEBUG"
    assert cfg.ci_max_parallel == 64
    assert cfg.ci_runner == "mycompany.ci:Runner"


def test_toolkit_config_bad_values_fall_back(monkeypatch):
    _clear(monkeypatch)
    monkeypatch.setenv("SGXSC_LOG_LEVEL", "chatty")
    monkeypatch.setenv("SGXSC_CI_MAX_PARALLEL", "many")
    cfg = ToolkitConfig.from_env()
    assert cfg.log_level == "WARNING"
    assert cfg.ci_max_parallel == 4


def test_scheduler_defaults():
    cfg = SchedulerConfig()
    assert cfg.keywords == frozenset({"fix", "bug", "issue", "release"})
    assert cfg.max_age == 30 * DAY_SECONDS
    assert cfg.default_capacity == 10
    assert cfg.manual_review == frozenset(MANDATORY_REVIEW)
    assert set(MANDATORY_REVIEW) == {"rustls", "webpki", "ring", "cryptocorrosion", "wasmi"}


def test_settings_from_mapping_converts_days_and_lowercases():
    scheduler, ci = settings_from_mapping(
        {"keywords": ["Fix", "CVE"], "max_age_days": 7, "capacity": 3, "ci": {"retry_budget": 0, "build_types": ["release"]}}
    )
    assert scheduler.keywords == frozenset({"fix", "cve"})
    assert scheduler.max_age == 7 * DAY_SECONDS
    assert scheduler.default_capacity == 3
    assert ci.retry_budget == 0
    assert ci.build_types == ["release"]
    assert ci.package_managers == ["cargo", "xargo"]


def test_settings_error_names_field():
    with pytest.raises(ConfigError) as exc:
        settings_from_mapping({"capacity": 0})
    assert exc.value.details["field"] == "capacity"

    with pytest.raises(ConfigError) as exc:
        settings_from_mapping({"ci": {"mass_failure_threshold": 1.5}})
    assert exc.value.details["field"] == "ci.mass_failure_threshold"

    with pytest.raises(ConfigError):
        settings_from_mapping({"unknown_knob": True})


def test_load_settings_missing_file_gives_defaults(tmp_path):
    scheduler, ci = load_settings(tmp_path / "nope.toml")
    assert scheduler == SchedulerConfig()
    assert ci == CiConfig()


def test_load_settings_reads_toml(tmp_path):
    path = tmp_path / "scheduler.toml"
    path.write_text(
        'keywords = ["fix", "security"]\nmax_age_days = 14\nmanual_review = ["rustls"]\n\n'
        '[ci]\npackage_managers = ["cargo"]\nmass_failure_threshold = 0.5\n',
        encoding="utf-8",
    )
    scheduler, ci = load_settings(path)
    assert scheduler.manual_review == frozenset({"rustls"})
    assert scheduler.max_age == 14 * DAY_SECONDS
    assert ci.package_managers == ["cargo"]
    assert ci.mass_failure_threshold == 0.5


def test_load_settings_bad_toml(tmp_path):
    path = tmp_path / "scheduler.toml"
    path.write_text("keywords = [", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_settings(path)


def test_error_shapes():
    err = RegistryError("boom", code="unknown_package", details={"name": "x"})
    assert err.as_error() == {"ok": False, "error": {"code": "unknown_package", "message": "boom", "details": {"name": "x"}}}

    doc = DocumentError("packages/3/status: bad", field="packages/3/status", source="snap.json")
    body = doc.as_error()["error"]
    assert body["code"] == "invalid_document"
    assert body["details"] == {"field": "packages/3/status", "source": "snap.json"}
