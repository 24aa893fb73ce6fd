"""Builtin scenario catalog.

These are the stock configurations the verification campaigns run; the CLI
accepts ``builtin:<name>`` wherever a config path is expected.  Exhaustive
families are kept small enough (by shared-step count) that full
interleaving enumeration stays in the thousands of schedules.
"""
from __future__ import annotations

import json


def _scn(name, kind, system, processes, checks, schedule, options=None, budget=10_000):
    return {
        "name": name,
        "object": {"kind": kind, "options": options or {}},
        "system": system,
        "processes": processes,
        "checks": checks,
        "schedule": schedule,
        "step_budget": budget,
    }


def _ops(pid, ops, **kw):
    return {"pid": pid, "program": "ops", "args": {"ops": ops}, **kw}


_SYS_3 = {"n": 3, "managers": [1], "verifiers": [2, 3]}
_SYS_3_ALL = {"n": 3, "managers": [1, 2, 3], "verifiers": [1, 2, 3]}
_SYS_2_ALL = {"n": 2, "managers": [1, 2], "verifiers": [1, 2]}


CATALOG: dict[str, dict] = {
    # --- allow-list -----------------------------------------------------
    "allowlist-smoke": _scn(
        "allowlist-smoke",
        "allowlist",
        _SYS_3,
        [_ops(1, [["append", "x"]]), _ops(2, [["prove", "x"]]), _ops(3, [["read"]])],
        ["linearizability", "no-consensus"],
        {"seeds": [0, 1000]},
    ),
    "allowlist-random": _scn(
        "allowlist-random",
        "allowlist",
        _SYS_3_ALL,
        [
            {"pid": 1, "program": "random-ops", "args": {"count": 2}},
            {"pid": 2, "program": "random-ops", "args": {"count": 2}},
            {"pid": 3, "program": "random-ops", "args": {"count": 2}},
        ],
        ["linearizability", "no-consensus"],
        {"seeds": [0, 1000]},
    ),
    "allowlist-progress": _scn(
        "allowlist-progress",
        "allowlist",
        _SYS_3,
        [
            _ops(1, [["append", "x"]]),
            _ops(2, [["prove", "x"]], start_after=[1]),
            _ops(3, [["prove", "x"]], start_after=[1]),
        ],
        ["linearizability", {"type": "progress", "expect": "valid"}],
        {"seeds": [0, 500]},
    ),
    # --- deny-list ------------------------------------------------------
    "denylist-smoke": _scn(
        "denylist-smoke",
        "denylist",
        _SYS_3,
        [_ops(1, [["append", "x"]]), _ops(2, [["prove", "x"]]), _ops(3, [["prove", "x"]])],
        ["linearizability", "anti-flickering"],
        {"seeds": [0, 1000]},
    ),
    "denylist-random": _scn(
        "denylist-random",
        "denylist",
        _SYS_3_ALL,
        [
            {"pid": 1, "program": "random-ops", "args": {"count": 2}},
            {"pid": 2, "program": "random-ops", "args": {"count": 2}},
            {"pid": 3, "program": "random-ops", "args": {"count": 2}},
        ],
        ["linearizability", "anti-flickering"],
        {"seeds": [0, 1000]},
    ),
    "denylist-progress": _scn(
        "denylist-progress",
        "denylist",
        _SYS_3,
        [
            _ops(1, [["append", "x"]]),
            _ops(2, [["prove", "x"]], start_after=[1]),
            _ops(3, [["prove", "x"]], start_after=[1]),
        ],
        ["linearizability", "anti-flickering", {"type": "progress", "expect": "invalid"}],
        {"seeds": [0, 500]},
    ),
    "denylist-2v": _scn(
        "denylist-2v",
        "denylist",
        _SYS_2_ALL,
        [_ops(1, [["append", "x"], ["prove", "x"]]), _ops(2, [["prove", "x"]])],
        ["linearizability", "anti-flickering"],
        {"crash_sweep": {"seed": 0, "processes": [1, 2]}},
    ),
    # --- negative controls ----------------------------------------------
    "broken-denylist": _scn(
        "broken-denylist",
        "denylist",
        _SYS_3,
        [_ops(1, [["append", "x"]]), _ops(2, [["prove", "x"]]), _ops(3, [["prove", "x"]])],
        ["anti-flickering"],
        {"seeds": [0, 1000]},
        options={"use_consensus": False},
    ),
    "broken-snapshot": _scn(
        "broken-snapshot",
        "snapshot",
        {"n": 3, "managers": [1], "verifiers": [1]},
        [_ops(1, [["update", "a1"]]), _ops(2, [["update", "b1"]]), _ops(3, [["snapshot"]])],
        ["linearizability"],
        {"exhaustive": True},
        options={"snapshot_impl": "broken"},
    ),
    # --- snapshot construction -------------------------------------------
    "snapshot-registers": _scn(
        "snapshot-registers",
        "snapshot",
        {"n": 3, "managers": [1], "verifiers": [1]},
        [
            _ops(1, [["update", "a1"], ["update", "a2"]]),
            _ops(2, [["update", "b1"]]),
            _ops(3, [["snapshot"], ["snapshot"]]),
        ],
        ["linearizability", "view-points", "monotonic-views"],
        {"seeds": [0, 1000]},
        options={"snapshot_impl": "registers"},
    ),
    "snapshot-registers-pair": _scn(
        "snapshot-registers-pair",
        "snapshot",
        {"n": 2, "managers": [1], "verifiers": [1]},
        [_ops(1, [["update", "a1"]]), _ops(2, [["snapshot"], ["snapshot"]])],
        ["linearizability", "view-points", "monotonic-views"],
        {"exhaustive": True},
        options={"snapshot_impl": "registers"},
    ),
    "snapshot-native": _scn(
        "snapshot-native",
        "snapshot",
        {"n": 3, "managers": [1], "verifiers": [1]},
        [_ops(1, [["update", "a1"]]), _ops(2, [["update", "b1"]]), _ops(3, [["snapshot"]])],
        ["linearizability", "view-points"],
        {"exhaustive": True},
        options={"snapshot_impl": "native"},
    ),
    # --- reductions -------------------------------------------------------
    "denylist-consensus-k2": _scn(
        "denylist-consensus-k2",
        "denylist-consensus",
        _SYS_2_ALL,
        [
            {"pid": 1, "program": "propose", "args": {"value": "a"}},
            {"pid": 2, "program": "propose", "args": {"value": "b"}},
        ],
        [{"type": "consensus-properties", "sentinel_prove": True}],
        {"seeds": [0, 500]},
    ),
    "denylist-consensus-k3": _scn(
        "denylist-consensus-k3",
        "denylist-consensus",
        _SYS_3_ALL,
        [
            {"pid": 1, "program": "propose", "args": {"value": "a"}},
            {"pid": 2, "program": "propose", "args": {"value": "b"}},
            {"pid": 3, "program": "propose", "args": {"value": "c"}},
        ],
        [{"type": "consensus-properties", "sentinel_prove": True}],
        {"seeds": [0, 500]},
    ),
    "anon-at-consensus": _scn(
        "anon-at-consensus",
        "anon-at-consensus",
        _SYS_2_ALL,
        [
            {"pid": 1, "program": "propose", "args": {"value": "a"}},
            {"pid": 2, "program": "propose", "args": {"value": "b"}},
        ],
        [{"type": "consensus-properties", "uncommit_once": True}],
        {"seeds": [0, 200]},
        options={"oracle": "o", "initial_tokens": ["t0"]},
    ),
    "evote-consensus": _scn(
        "evote-consensus",
        "evote-consensus",
        _SYS_2_ALL,
        [
            {"pid": 1, "program": "propose", "args": {"value": "a"}},
            {"pid": 2, "program": "propose", "args": {"value": "b"}},
        ],
        ["consensus-properties"],
        {"seeds": [0, 200]},
    ),
    # --- applications ------------------------------------------------------
    "anon-at-race": _scn(
        "anon-at-race",
        "anon-at",
        _SYS_2_ALL,
        [
            {"pid": 1, "program": "transfer", "args": {"token": "t0"}},
            {"pid": 2, "program": "transfer", "args": {"token": "t0"}},
        ],
        ["transfer-audit"],
        {"seeds": [0, 500]},
        options={"oracle": "o", "initial_tokens": ["t0"]},
    ),
    "evote-same-token": _scn(
        "evote-same-token",
        "evote",
        _SYS_2_ALL,
        [
            {"pid": 1, "program": "vote", "args": {"ballot": "b1"}},
            {"pid": 2, "program": "vote", "args": {"ballot": "b1"}},
        ],
        [{"type": "evote-audit", "unique": True, "right_to_vote": True}],
        {"seeds": [0, 500]},
        options={"ballots": {"b1": {"nonce": "n1", "blinding": "r1", "choice": "yes"}}},
    ),
    "evote-conflict": _scn(
        "evote-conflict",
        "evote",
        _SYS_2_ALL,
        [
            {"pid": 1, "program": "vote", "args": {"ballot": "b-yes"}},
            {"pid": 2, "program": "vote", "args": {"ballot": "b-no"}},
        ],
        [{"type": "evote-audit", "expect_entries": 0}],
        {"seeds": [0, 1], "mode": "roundrobin"},
        options={
            "ballots": {
                "b-yes": {"nonce": "n1", "blinding": "r1", "choice": "yes"},
                "b-no": {"nonce": "n1", "blinding": "r1", "choice": "no"},
            }
        },
    ),
}


def allowlist_exhaustive_family() -> list[dict]:
    """3-process allow-list scenarios small enough to enumerate fully (<= 10 steps)."""
    combos = [
        ("exh-a1", _SYS_3, [_ops(1, [["append", "x"]]), _ops(2, [["prove", "x"]]), _ops(3, [["read"]])]),
        (
            "exh-a2",
            {"n": 3, "managers": [1, 2], "verifiers": [3]},
            [_ops(1, [["append", "x"]]), _ops(2, [["append", "y"]]), _ops(3, [["prove", "x"]])],
        ),
        ("exh-a3", _SYS_3, [_ops(1, [["append", "x"]]), _ops(2, [["prove", "x"]]), _ops(3, [["prove", "x"]])]),
        (
            "exh-a4",
            {"n": 3, "managers": [1], "verifiers": [1, 2]},
            [_ops(1, [["append", "x"], ["prove", "x"]]), _ops(2, [["prove", "x"]]), _ops(3, [["read"]])],
        ),
        ("exh-a5", _SYS_3, [_ops(1, [["append", "x"]]), _ops(2, [["read"]]), _ops(3, [["read"]])]),
        (
            "exh-a6",
            {"n": 3, "managers": [2], "verifiers": [1, 3]},
            [_ops(1, [["prove", "x"]]), _ops(2, [["append", "x"]]), _ops(3, [["prove", "x"]])],
        ),
    ]
    return [
        _scn(name, "allowlist", system, procs, ["linearizability", "no-consensus"], {"exhaustive": True})
        for name, system, procs in combos
    ]


def denylist_exhaustive_family() -> list[dict]:
    """Deny-list scenarios that still enumerate in the tens of thousands of schedules."""
    combos = [
        ("exh-d1", _SYS_3, [_ops(1, [["append", "x"]]), _ops(2, [["prove", "x"]]), _ops(3, [["read"]])]),
        ("exh-d2", _SYS_3, [_ops(2, [["prove", "x"]]), _ops(3, [["prove", "x"]])]),
        ("exh-d3", _SYS_2_ALL, [_ops(1, [["append", "x"]]), _ops(2, [["prove", "x"]])]),
        ("exh-d4", _SYS_3, [_ops(2, [["prove", "x"]]), _ops(3, [["prove", "y"]])]),
    ]
    return [
        _scn(name, "denylist", system, procs, ["linearizability", "anti-flickering"], {"exhaustive": True})
        for name, system, procs in combos
    ]


def get(name: str) -> dict:
    if name not in CATALOG:
        raise KeyError(f"no builtin scenario named {name!r}")
    return json.loads(json.dumps(CATALOG[name]))
