# SGX Supply Chain Toolkit
# File: tests/test_cli.py
# Version: v1

from __future__ import annotations

import io
import json
from pathlib import Path

import pytest

from sgx_supply_chain import __version__
from sgx_supply_chain.cli._metadata import COMMAND_REGISTRY, iter_commands
from sgx_supply_chain.cli.commands import HANDLERS
from sgx_supply_chain.cli.main import main

from tests import fixtures


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    for name in ("SGXSC_STATE_DIR", "SGXSC_CONFIG", "SGXSC_AUDIT_ENABLED", "SGXSC_AUDIT_LOG_PATH", "SGXSC_CI_RUNNER"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def run(*argv: str):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write(path: Path, doc) -> str:
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def write_lines(path: Path, rows) -> str:
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return str(path)


def test_every_command_has_a_handler():
    assert set(HANDLERS) == set(COMMAND_REGISTRY)
    assert [name for name, _ in iter_commands()] == list(COMMAND_REGISTRY)


def test_version_flag(capsys):
    assert run("--version")[0] == 0
    assert __version__ in capsys.readouterr().out


def test_usage_error_exits_two():
    assert run("registry")[0] == 2
    assert run("no-such-command")[0] == 2


# -- registry ----------------------------------------------------------------


@pytest.fixture
def snapshot(tmp_path) -> str:
    return write(tmp_path / "snapshot.json", fixtures.registry_snapshot())


def test_registry_report_top20(tmp_path, snapshot):
    ranked = write(tmp_path / "ranked.json", fixtures.ranked_top100(fixtures.registry_snapshot()))
    code, out, _ = run("registry", "report", "--snapshot", snapshot, "--ranked", ranked, "--top", "20")
    assert code == 0
    doc = json.loads(out)
    assert doc["availability_rate"] == pytest.approx(0.9)
    assert doc["not_ported"] == 0 and doc["top_n"] == 20


def test_registry_report_text(tmp_path, snapshot):
    ranked = write(tmp_path / "ranked.json", fixtures.ranked_top100(fixtures.registry_snapshot()))
    code, out, _ = run("registry", "report", "--snapshot", snapshot, "--ranked", ranked, "--format", "text")
    assert code == 0
    assert "not ported 9" in out


def test_registry_histogram_defaults_to_ported_roots(snapshot):
    code, out, _ = run("registry", "histogram", "--snapshot", snapshot)
    assert code == 0
    doc = json.loads(out)
    assert doc["buckets"] == fixtures.CLOSURE_HISTOGRAM
    assert doc["total"] == 159


def test_registry_tally(snapshot):
    code, out, _ = run("registry", "tally", "--snapshot", snapshot)
    assert code == 0
    assert json.loads(out)["categories"]["Crypto"] == 42


def test_missing_snapshot_is_an_error(tmp_path):
    code, out, err = run("registry", "tally", "--snapshot", str(tmp_path / "absent.json"))
    assert code == 2
    assert out == ""
    doc = json.loads(err)
    assert doc["ok"] is False and doc["error"]["code"] == "invalid_document"


def test_registry_admit():
    code, out, _ = run("registry", "admit", "--library", "sgx-tcrypto", "--high-quality", "--irreplaceable-dependency")
    assert code == 0
    doc = json.loads(out)
    assert doc["library"] == "sgx-tcrypto" and doc["advisory"] is True


# -- plan --------------------------------------------------------------------


def test_plan_abort_is_a_finding(tmp_path):
    snap = write(
        tmp_path / "s.json",
        {
            "packages": [
                {"name": "A", "version": "1", "deps": ["B"], "status": "candidate"},
                {"name": "B", "version": "1", "deps": [], "status": "inapplicable"},
            ]
        },
    )
    code, out, _ = run("plan", "--snapshot", snap, "--root", "A")
    assert code == 1
    assert json.loads(out)["blocker"] == "B"
    assert run("plan", "--snapshot", snap, "--root", "A", "--strip", "B")[0] == 0


def test_plan_requires_root(snapshot):
    code, _, err = run("plan", "--snapshot", snapshot)
    assert code == 2
    assert json.loads(err)["error"]["code"] == "invalid_argument"


# -- scheduler and repos -----------------------------------------------------


def _tree_file(tmp_path: Path, name: str, lines) -> str:
    return write(tmp_path / f"{name}.json", {"files": {"src/lib.rs": list(lines)}})


def test_keyword_patch_for_mandatory_library_is_queued(tmp_path):
    base = _tree_file(tmp_path, "base", fixtures.BASE_LINES)
    assert run("repo", "init", "--library", "rustls", "--base", base, "--now", "0")[0] == 0
    patches = write_lines(
        tmp_path / "p.jsonl", [{"id": "r1", "library": "rustls", "message": "Fix handshake", "timestamp": 5}]
    )
    assert run("scheduler", "ingest", "--patches", patches, "--now", "5")[0] == 0

    code, out, _ = run("scheduler", "step", "--now", "10")
    assert code == 1
    doc = json.loads(out)
    assert [a["action"] for a in doc["actions"]] == ["queued_for_review"]
    assert doc["actions"][0]["decision"]["routed_to"] == "manual_review"
    assert doc["review_queue"][0]["library"] == "rustls"

    code, out, _ = run("scheduler", "approve", "--library", "rustls", "--approver", "alice", "--now", "20")
    assert code == 0
    assert json.loads(out)["action"]["decision"]["approver"] == "alice"

    code, out, _ = run("scheduler", "status", "--now", "21")
    assert json.loads(out)["decisions"] == 2


def test_repo_init_refuses_to_overwrite(tmp_path):
    base = _tree_file(tmp_path, "base", fixtures.BASE_LINES)
    assert run("repo", "init", "--library", "ring", "--base", base)[0] == 0
    assert run("repo", "init", "--library", "ring", "--base", base)[0] == 2
    assert run("repo", "init", "--library", "ring", "--base", base, "--force")[0] == 0


def test_repo_init_rejects_path_like_library(tmp_path):
    base = _tree_file(tmp_path, "base", fixtures.BASE_LINES)
    code, _, err = run("repo", "init", "--library", "../escape", "--base", base)
    assert code == 2
    assert json.loads(err)["error"]["code"] == "invalid_library_name"
    assert not (tmp_path / ".sgxsc-state" / "escape").exists()


def test_step_with_missing_repo(tmp_path):
    patches = write_lines(tmp_path / "p.jsonl", [{"id": "p1", "library": "simd", "message": "bug", "timestamp": 0}])
    run("scheduler", "ingest", "--patches", patches, "--now", "0")
    code, _, err = run("scheduler", "step", "--now", "1")
    assert code == 2
    assert json.loads(err)["error"]["code"] == "missing_repo"


def test_global_options_before_or_after_subcommand(tmp_path):
    state = str(tmp_path / "elsewhere")
    code, out, _ = run("--state-dir", state, "scheduler", "status")
    assert code == 0
    code2, out2, _ = run("scheduler", "status", "--state-dir", state)
    assert (code2, out2) == (code, out)


def test_bad_config_file(tmp_path):
    state = tmp_path / "state"
    state.mkdir()
    (state / "scheduler.toml").write_text("capacity = 0\n", encoding="utf-8")
    code, _, err = run("scheduler", "policy", "--state-dir", str(state))
    assert code == 2
    doc = json.loads(err)
    assert doc["error"]["code"] == "config_error"
    assert doc["error"]["details"]["field"] == "capacity"


def test_policy_disclosure():
    code, out, _ = run("scheduler", "policy")
    assert code == 0
    doc = json.loads(out)
    assert [r["library"] for r in doc["manual_review"]] == ["cryptocorrosion", "ring", "rustls", "wasmi", "webpki"]
    assert doc["defaults_overridden"] is False
    assert doc["capacity"] == 10 and doc["max_age_seconds"] == 30 * 86400


# -- ci ----------------------------------------------------------------------


def test_ci_run_and_weekly_report(tmp_path):
    script = write(tmp_path / "script.json", {"ring": {"*": ["fail:network", "pass"]}, "libc": {"*": ["fail"]}})
    code, out, _ = run("ci", "run", "--library", "ring", "--script", script, "--now", "100")
    assert code == 0
    assert {r["attempts"] for r in json.loads(out)["records"]} == {2}

    code, out, _ = run("ci", "run", "--library", "libc", "--script", script, "--now", "200")
    assert code == 1
    assert json.loads(out)["failed"] == 8

    code, out, _ = run("ci", "report", "--format", "text")
    assert code == 0
    assert out.splitlines() == ["week,total,failed,rate", "1,2,1,0.5000"]


def test_ci_run_without_runner(tmp_path):
    code, _, err = run("ci", "run", "--library", "ring")
    assert code == 2
    assert json.loads(err)["error"]["code"] == "runner_unavailable"


# -- svn and audit -----------------------------------------------------------


def test_svn_check_violation_and_enforcement(tmp_path):
    events = write_lines(
        tmp_path / "events.jsonl",
        [
            {"type": "lib_release", "library": "lib", "security_bump": False},
            {"type": "lib_release", "library": "lib", "security_bump": True},
            {"type": "sdk_bump"},
        ],
    )
    code, out, _ = run("svn", "check", "--events", events)
    assert code == 1
    assert json.loads(out)["ok"] is False

    code, out, _ = run("svn", "check", "--events", events, "--enforce-latest-only")
    assert code == 0
    doc = json.loads(out)
    assert [(r["lib_rev"], r["sdk_svn"], r["svn"]) for r in doc["assignment"]] == [(1, 0, 0), (1, 1, 1)]
    assert {"type": "retire", "library": "lib", "lib_rev": 0} in doc["events"]


def test_audit_without_warnings(tmp_path):
    facts = write(tmp_path / "facts.json", {"functions": []})
    code, out, _ = run("audit", "--facts", facts)
    assert code == 0
    assert json.loads(out) == {"warnings": []}


def test_audit_sources_with_remediations(tmp_path):
    src = tmp_path / "src"
    src.mkdir()
    (src / "lib.rs").write_text("#[ecall]\nfn ecall_seed() {\n    let r = rand::random();\n}\n", encoding="utf-8")
    patterns = write(tmp_path / "patterns.json", {"rand::random": "randomness"})
    sensitivity = write(tmp_path / "sens.json", {"ecall_seed": True})
    code, out, _ = run("audit", "--sources", str(src), "--patterns", patterns, "--sensitivity", sensitivity)
    assert code == 1
    doc = json.loads(out)
    assert doc["warnings"][0]["sites"] == ["lib.rs:3"]
    assert doc["remediations"][0]["substitute"] == "hw-rng"


def test_audit_requires_input():
    assert run("audit")[0] == 2


# -- audit trail -------------------------------------------------------------


def test_audit_trail_records_commands(monkeypatch, tmp_path):
    monkeypatch.setenv("SGXSC_AUDIT_ENABLED", "1")
    state = tmp_path / "state"
    run("scheduler", "status", "--state-dir", str(state))
    run("registry", "tally", "--snapshot", "missing.json", "--state-dir", str(state))
    rows = [json.loads(line) for line in (state / "audit.log").read_text(encoding="utf-8").splitlines()]
    assert [(r["command"], r["outcome"], r["exit_code"]) for r in rows] == [
        ("scheduler status", "ok", 0),
        ("registry tally", "error", 2),
    ]
    assert rows[1]["error_code"] == "invalid_document"
