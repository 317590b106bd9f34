# SGX Supply Chain Toolkit
# File: tests/test_store.py
# Version: v1

from __future__ import annotations

import json
import random

import pytest

from sgx_supply_chain import store
from sgx_supply_chain.cache import Patch, PatchCache
from sgx_supply_chain.errors import StoreError
from sgx_supply_chain.merge import Conflict
from sgx_supply_chain.policy import Route
from sgx_supply_chain.repo import Escalation
from sgx_supply_chain.scheduler import (
    MergeDecision,
    Outcome,
    PendingEscalation,
    ReviewEntry,
    SchedulerState,
    SchedulerStore,
    Trigger,
)


def _random_state(rng: random.Random) -> SchedulerState:
    libs = rng.sample(["ring", "libc", "serde", "rustls", "log", "rand"], rng.randint(0, 4))
    state = SchedulerState()
    counter = 0
    for lib in libs:
        cache = PatchCache(library=lib, capacity=rng.randint(1, 12))
        for _ in range(rng.randint(0, 5)):
            counter += 1
            cache.entries.append(Patch(f"p{counter}", lib, rng.choice(["fix: crash", "docs", "bump"]), rng.randint(0, 10**6)))
        state.caches[lib] = cache
        if rng.random() < 0.5:
            state.last_merge[lib] = rng.randint(0, 10**6)
    for lib in libs[:2]:
        if rng.random() < 0.5:
            counter += 1
            state.review_queue.append(
                ReviewEntry(lib, (Patch(f"r{counter}", lib, "fix", 5),), "mandatory review", Trigger.KEYWORD, rng.randint(0, 99))
            )
    if libs and rng.random() < 0.5:
        lib = libs[-1]
        conflict = Conflict("src/lib.rs", 2, 3, ("a",), ("b",))
        state.escalations[lib] = PendingEscalation(
            Escalation(lib, (conflict,), "f" * 64, 77), ("p1",), Trigger.AGE, Route.AUTO_MERGE, None
        )
    return state


def test_snapshot_round_trip_random_states(tmp_path):
    rng = random.Random(1234)
    path = tmp_path / "state.json"
    for _ in range(120):
        state = _random_state(rng)
        store.write_snapshot(state.to_json(), path, written_at=1)
        snap = store.read_snapshot(path)
        assert snap is not None
        restored = SchedulerState.from_json(snap.payload)
        assert restored.to_json() == state.to_json()
        assert restored == state


def test_read_missing_snapshot_is_none(tmp_path):
    assert store.read_snapshot(tmp_path / "absent.json") is None


def test_failed_write_leaves_previous_snapshot(tmp_path, monkeypatch):
    path = tmp_path / "state.json"
    store.write_snapshot({"generation": 1}, path, written_at=10)

    def broken_replace(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(store.os, "replace", broken_replace)
    with pytest.raises(StoreError) as exc:
        store.write_snapshot({"generation": 2}, path, written_at=11)
    assert exc.value.code == "io_failure"
    monkeypatch.undo()

    snap = store.read_snapshot(path)
    assert snap.payload == {"generation": 1}
    assert [p.name for p in tmp_path.iterdir()] == ["state.json"]


def test_unknown_schema_version(tmp_path):
    path = tmp_path / "state.json"
    path.write_text(json.dumps({"version": 99, "written_at": 0, "payload": {}}), encoding="utf-8")
    with pytest.raises(StoreError) as exc:
        store.read_snapshot(path)
    assert exc.value.code == "schema_mismatch"


def test_append_and_replay_in_order(tmp_path):
    log = store.AppendLog(tmp_path / "log.jsonl")
    for i in range(3):
        log.append({"n": i})
    result = log.replay()
    assert result.records == [{"n": 0}, {"n": 1}, {"n": 2}]
    assert result.truncated is False


def test_torn_tail_is_dropped_and_repaired(tmp_path):
    path = tmp_path / "log.jsonl"
    log = store.AppendLog(path)
    log.append({"n": 0})
    log.append({"n": 1})
    with path.open("a", encoding="utf-8") as fh:
        fh.write('{"n": 2, "trunc')

    result = log.replay()
    assert result.records == [{"n": 0}, {"n": 1}]
    assert result.truncated is True

    log.append({"n": 3})
    assert log.replay().records == [{"n": 0}, {"n": 1}, {"n": 3}]


def test_empty_log(tmp_path):
    path = tmp_path / "log.jsonl"
    path.write_text("", encoding="utf-8")
    assert store.AppendLog(path).replay().records == []
    assert store.AppendLog(tmp_path / "missing.jsonl").replay().records == []


def test_replay_returns_exact_prefixes(tmp_path):
    rng = random.Random(7)
    path = tmp_path / "log.jsonl"
    log = store.AppendLog(path)
    written = []
    for i in range(25):
        record = {"i": i, "v": rng.randint(0, 1000)}
        log.append(record)
        written.append(record)
        assert log.replay().records == written


def test_scheduler_store_appends_only_new_decisions(tmp_path):
    sched = SchedulerStore(tmp_path)
    state = sched.load()
    state.decision_log.append(MergeDecision("libc", Trigger.AGE, ("p1",), Route.AUTO_MERGE, 10, Outcome.MERGED))
    sched.save(state, now=10)
    state = sched.load()
    state.decision_log.append(MergeDecision("libc", Trigger.KEYWORD, ("p2",), Route.AUTO_MERGE, 20, Outcome.MERGED))
    sched.save(state, now=20)

    lines = (tmp_path / "decisions.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert [d.patch_ids for d in sched.load().decision_log] == [("p1",), ("p2",)]


def test_canonical_json_is_stable():
    assert store.canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'
    assert "\n" not in store.canonical_json({"text": "x\ny"})
