"""Simulator: determinism, event structure, base primitives, crash injection."""
import json

import pytest

from listlab import sim
from listlab.sim import (
    BudgetExceeded,
    ProgramSpec,
    Runtime,
    Schedule,
    SimulationError,
    Step,
    build_ops,
    enumerate_runs,
    history_from_events,
    run,
)


def _reg_writer_program(reg, value):
    def make(ctx):
        yield from ctx.call(reg, "write", value)

    return make


def _reg_reader_program(reg, out):
    def make(ctx):
        out[ctx.pid] = yield from ctx.call(reg, "read")

    return make


def test_single_process_append_like_history():
    rt = Runtime()
    reg = rt.new_register("r", writer=1)

    def prog(ctx):
        yield from ctx.call(reg, "write", "x")

    h = run([ProgramSpec(1, prog)], rt, Schedule(seed=0))
    kinds = [e.kind for e in h.events]
    assert kinds == ["invocation", "response"]
    assert h.events[1].ret == "ok"


def test_same_seed_reproduces_identical_history():
    def build():
        rt = Runtime()
        reg1 = rt.new_register("r1", writer=1)
        reg2 = rt.new_register("r2", writer=2)
        out = {}
        progs = [
            ProgramSpec(1, _reg_writer_program(reg1, "a")),
            ProgramSpec(2, _reg_writer_program(reg2, "b")),
            ProgramSpec(3, _reg_reader_program(reg1, out)),
        ]
        return rt, progs

    rt1, p1 = build()
    rt2, p2 = build()
    h1 = run(p1, rt1, Schedule(seed=99))
    h2 = run(p2, rt2, Schedule(seed=99))
    assert h1.jsonl() == h2.jsonl()
    assert h1.decisions == h2.decisions


def test_different_seeds_vary_interleavings():
    seen = set()
    for seed in range(20):
        rt = Runtime()
        r1 = rt.new_register("r1", writer=1)
        r2 = rt.new_register("r2", writer=2)
        progs = [ProgramSpec(1, _reg_writer_program(r1, "a")), ProgramSpec(2, _reg_writer_program(r2, "b"))]
        h = run(progs, rt, Schedule(seed=seed))
        seen.add(tuple(h.decisions))
    assert len(seen) > 1


def test_crash_leaves_pending_invocation():
    rt = Runtime()
    reg1 = rt.new_register("a", writer=2)
    reg2 = rt.new_register("b", writer=2)

    def prog(ctx):
        yield from ctx.call(reg1, "write", "v1")
        yield from ctx.call(reg2, "write", "v2")

    # crash right after the first shared step: the op took effect but its
    # response was never delivered, so it stays pending
    h = run([ProgramSpec(2, prog)], rt, Schedule(seed=0, decisions=(("step", 2), ("crash", 2))))
    assert h.crashed == {2}
    ops = build_ops(h)
    assert len(ops) == 1 and ops[0].pending
    assert reg1.value == "v1" and reg2.value is None


def test_crash_between_operations():
    rt = Runtime()
    reg1 = rt.new_register("a", writer=2)
    reg2 = rt.new_register("b", writer=2)

    def prog(ctx):
        yield from ctx.call(reg1, "write", "v1")
        yield from ctx.call(reg2, "write", "v2")

    # two steps: first write, then response delivery + second op's write;
    # crashing there leaves op1 complete and op2 pending-with-effect
    h = run(
        [ProgramSpec(2, prog)],
        rt,
        Schedule(seed=0, decisions=(("step", 2), ("step", 2), ("crash", 2))),
    )
    ops = build_ops(h)
    assert [o.pending for o in ops] == [False, True]
    assert ops[0].ret == "ok"
    assert reg2.value == "v2"


def test_register_semantics():
    rt = Runtime()
    reg = rt.new_register("r", writer=1, initial=None)
    assert reg.apply(2, "read", ()) is None  # initial value before any write
    reg.apply(1, "write", ("v1",))
    reg.apply(1, "write", ("v2",))
    assert reg.apply(3, "read", ()) == "v2"
    with pytest.raises(SimulationError):
        reg.apply(2, "write", ("intruder",))


def test_consensus_cell_first_proposal_wins():
    rt = Runtime(consensus_k=2)
    cell = rt.new_cell("c", participants={1, 2})
    assert cell.apply(1, "propose", ("a",)) == "a"
    assert cell.apply(2, "propose", ("b",)) == "a"


def test_consensus_cell_guards():
    rt = Runtime(consensus_k=2)
    with pytest.raises(SimulationError):
        rt.new_cell("big", participants={1, 2, 3})
    cell = rt.new_cell("c", participants={1, 2})
    with pytest.raises(SimulationError):
        cell.apply(3, "propose", ("x",))
    cell.apply(1, "propose", ("x",))
    with pytest.raises(SimulationError):
        cell.apply(1, "propose", ("again",))


def test_consensus_agreement_over_random_schedules():
    for seed in range(100):
        rt = Runtime(consensus_k=3)
        cell = rt.new_cell("c", participants={1, 2, 3})
        got = {}

        def prog(ctx):
            got[ctx.pid] = yield from ctx.call(cell, "propose", f"v{ctx.pid}")

        progs = [ProgramSpec(p, prog) for p in (1, 2, 3)]
        run(progs, rt, Schedule(seed=seed))
        assert len(set(got.values())) == 1
        assert set(got.values()) <= {"v1", "v2", "v3"}


def test_budget_exceeded_raises():
    rt = Runtime()
    reg = rt.new_register("r", writer=1)

    def spinner(ctx):
        while True:
            yield Step(reg, "read")

    with pytest.raises(BudgetExceeded):
        run([ProgramSpec(1, spinner)], rt, Schedule(seed=0), max_steps=50)


def test_history_jsonl_field_shape():
    rt = Runtime()
    reg = rt.new_register("r", writer=1)

    def prog(ctx):
        yield from ctx.call(reg, "write", "x")

    h = run([ProgramSpec(1, prog)], rt, Schedule(seed=0))
    lines = [json.loads(l) for l in h.jsonl().splitlines()]
    assert {"event_id", "process", "kind", "object", "op", "args"} == set(lines[0])
    assert {"event_id", "process", "kind", "object", "op", "ret"} == set(lines[1])
    assert h.schedule_json() == {"seed": 0, "decisions": [["step", 1], ["step", 1]]}


def test_history_roundtrip_from_events():
    rt = Runtime()
    reg = rt.new_register("r", writer=1)

    def prog(ctx):
        yield from ctx.call(reg, "write", "x")

    h = run([ProgramSpec(1, prog)], rt, Schedule(seed=0))
    h2 = history_from_events([json.loads(l) for l in h.jsonl().splitlines()])
    assert h2.jsonl() == h.jsonl()


def test_replay_decisions_reproduce_history():
    def build():
        rt = Runtime()
        r1 = rt.new_register("r1", writer=1)
        r2 = rt.new_register("r2", writer=2)
        return rt, [ProgramSpec(1, _reg_writer_program(r1, "a")), ProgramSpec(2, _reg_writer_program(r2, "b"))]

    rt, progs = build()
    h = run(progs, rt, Schedule(seed=5))
    rt2, progs2 = build()
    h2 = run(progs2, rt2, Schedule(decisions=tuple(h.decisions), extend="error"))
    assert h2.jsonl() == h.jsonl()


def test_enumeration_covers_sequential_extremes():
    def build():
        rt = Runtime()
        r1 = rt.new_register("r1", writer=1)
        r2 = rt.new_register("r2", writer=2)
        return rt, [ProgramSpec(1, _reg_writer_program(r1, "a")), ProgramSpec(2, _reg_writer_program(r2, "b"))]

    orders = [tuple(pid for _, pid in dec) for dec, _ in enumerate_runs(build)]
    # each op is 1 shared step + 1 finishing step
    assert (1, 1, 2, 2) in orders  # strictly sequential, p1 first
    assert (2, 2, 1, 1) in orders  # strictly sequential, p2 first
    assert (1, 2, 1, 2) in orders  # maximally interleaved
    assert len(orders) == len(set(orders))


def test_start_after_sequencing():
    rt = Runtime()
    r1 = rt.new_register("r1", writer=1)
    r2 = rt.new_register("r2", writer=2)
    order = []

    def first(ctx):
        yield from ctx.call(r1, "write", "a")
        order.append("first-done")

    def second(ctx):
        order.append("second-start")
        yield from ctx.call(r2, "write", "b")

    h = run(
        [ProgramSpec(1, first), ProgramSpec(2, second, start_after=(1,))],
        rt,
        Schedule(seed=0),
    )
    assert order == ["first-done", "second-start"]


def test_shared_array_swmr_discipline():
    rt = Runtime()
    arr = rt.new_array("a", width=2, initial=None)
    arr.apply(1, "update", ("x",))
    assert arr.apply(2, "snapshot", ()) == ("x", None)
    with pytest.raises(SimulationError):
        arr.slot_of(5)


def test_grow_array_write_once_identical():
    rt = Runtime()
    g = rt.new_grow_array("g")
    assert g.apply(1, "update_at", (0, "rec")) is True
    assert g.apply(2, "update_at", (0, "rec")) is False  # same content ok, not first
    with pytest.raises(SimulationError):
        g.apply(2, "update_at", (0, "different"))
    assert g.apply(1, "snapshot", ()) == ((0, "rec"),)
