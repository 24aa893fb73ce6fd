"""Single-writer atomic snapshot built wait-free from SWMR registers.

Classic double-collect with helping: every update embeds the view obtained
by its own scan; a scanner that fails to get two identical consecutive
collects, but sees some writer move twice, borrows that writer's embedded
view (the second write started after the scan did, so its embedded view
fits inside the scan's interval).  Sequence numbers are unbounded, which
keeps the construction simple; bounded-register tricks buy nothing here.

``BrokenSnapshot`` is the negative control: bounded double-collect retries
with no helping, returning the last collect on mismatch.  Exhaustive
3-process enumeration exhibits its non-linearizable views.
"""
from __future__ import annotations

from typing import Optional

from .sim import Runtime, SharedArray, SimulationError, Step


class RegisterSnapshot:
    def __init__(
        self,
        runtime: Runtime,
        object_id: str,
        width: int,
        initial=None,
        owner: str = "",
        trace_writes: bool = False,
    ):
        self.object_id = object_id
        self.width = width
        self.trace_writes = trace_writes
        self.registers = [
            runtime.new_register(
                f"{object_id}.r{i}", writer=i + 1, initial=(initial, 0, None), owner=owner or object_id
            )
            for i in range(width)
        ]
        # local per-writer sequence mirrors (writer-sequential, so exact)
        self._seq = [0] * width

    def slot_of(self, pid: int) -> int:
        if not 1 <= pid <= self.width:
            raise SimulationError(f"{self.object_id}: process {pid} has no slot")
        return pid - 1

    def _collect(self, ctx):
        cur = []
        for r in self.registers:
            cur.append((yield Step(r, "read")))
        return cur

    def _scan(self, ctx):
        """Return (values, seqs): a linearizable instantaneous view.

        At most width+2 collects: each failed consecutive pair sees at least
        one mover, and once any single writer has moved twice we can borrow.
        """
        prev = None
        moved: dict[int, int] = {}
        for _ in range(self.width + 2):
            cur = yield from self._collect(ctx)
            if prev is not None:
                if all(c[1] == p[1] for c, p in zip(cur, prev)):
                    return tuple(c[0] for c in cur), tuple(c[1] for c in cur)
                for i, (c, p) in enumerate(zip(cur, prev)):
                    if c[1] != p[1]:
                        moved[i] = moved.get(i, 0) + 1
                        if moved[i] >= 2:
                            assert c[2] is not None  # a moved slot was written, so it embeds a view
                            return c[2]
            prev = cur
        raise SimulationError(f"{self.object_id}: scan exceeded its wait-free collect bound")

    def _write_mark(self, ctx, slot, value, seq, extra):
        if not self.trace_writes and extra is None:
            return None

        def m(_result):
            out = []
            if self.trace_writes:
                out.append(
                    {"object": self.object_id, "lin": "slot-write", "slot": slot, "value": value, "seq": seq}
                )
            if extra is not None:
                got = extra(_result)
                if got is not None:
                    out.extend(got if isinstance(got, list) else [got])
            return out or None

        return m

    def op_update(self, ctx, v, mark=None):
        view = yield from self._scan(ctx)
        slot = self.slot_of(ctx.pid)
        self._seq[slot] += 1
        seq = self._seq[slot]
        reg = self.registers[slot]
        yield Step(reg, "write", ((v, seq, view),), mark=self._write_mark(ctx, slot, v, seq, mark))
        return "ok"

    def op_snapshot(self, ctx):
        values, _seqs = yield from self._scan(ctx)
        return values


class BrokenSnapshot(RegisterSnapshot):
    """Bounded double-collect, no helping: returns the last collect on mismatch."""

    def __init__(self, runtime, object_id, width, initial=None, owner="", trace_writes=False, retries=1):
        super().__init__(runtime, object_id, width, initial, owner, trace_writes)
        self.retries = retries

    def op_update(self, ctx, v, mark=None):
        # plain write, no embedded scan
        slot = self.slot_of(ctx.pid)
        self._seq[slot] += 1
        seq = self._seq[slot]
        reg = self.registers[slot]
        yield Step(reg, "write", ((v, seq, None),), mark=self._write_mark(ctx, slot, v, seq, mark))
        return "ok"

    def op_snapshot(self, ctx):
        prev = yield from self._collect(ctx)
        for _ in range(self.retries):
            cur = yield from self._collect(ctx)
            if all(c[1] == p[1] for c, p in zip(cur, prev)):
                break
            prev = cur
        return tuple(p[0] for p in prev)


class TracingArray(SharedArray):
    """Native array that also marks every slot write (for snapshot oracles)."""

    def op_update(self, ctx, v, mark=None):
        slot = self.slot_of(ctx.pid)
        seq = self.seqs[slot] + 1

        def m(_result):
            out = [{"object": self.object_id, "lin": "slot-write", "slot": slot, "value": v, "seq": seq}]
            if mark is not None:
                got = mark(_result)
                if got is not None:
                    out.extend(got if isinstance(got, list) else [got])
            return out

        return (yield Step(self, "update", (v,), mark=m))


def make_snapshot(
    runtime: Runtime,
    object_id: str,
    width: int,
    impl: str = "native",
    initial=None,
    owner: str = "",
    trace_writes: bool = False,
):
    """Snapshot-object factory: 'native' (one atomic step per op) or 'registers'."""
    if impl == "native":
        if trace_writes:
            prim = TracingArray(runtime, object_id, owner or object_id, width, initial)
            runtime._register(prim)
            return prim
        return runtime.new_array(object_id, width, initial=initial, owner=owner or object_id)
    if impl == "registers":
        return RegisterSnapshot(runtime, object_id, width, initial, owner, trace_writes)
    if impl == "broken":
        return BrokenSnapshot(runtime, object_id, width, initial, owner, trace_writes)
    raise ValueError(f"unknown snapshot impl {impl!r}")
