"""Deterministic cooperative simulator.

Process programs are Python generators.  Every ``yield`` hands the scheduler
one atomic access to a base primitive (register, array, consensus cell); the
scheduler picks which process advances next, either from a seeded RNG or
from an explicit decision list.  Local computation between yields is
instantaneous, so interleaving only happens at shared accesses, which is the
granularity that matters for linearizability.

Replaying the same (program set, schedule) pair reproduces the identical
decision sequence and the identical history, byte for byte.
"""
from __future__ import annotations

import dataclasses
import json
import random
from dataclasses import dataclass, field
from typing import Callable, Generator, Iterable, Optional

PENDING = "__pending__"

INVOCATION = "invocation"
RESPONSE = "response"
CRASH = "crash"
MARK = "mark"


class SimulationError(Exception):
    """A run violated a structural rule (writer discipline, wait-free bound, ...)."""


class BudgetExceeded(SimulationError):
    """A correct process failed to finish within the step budget: a liveness bug."""


def to_jsonable(x):
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    if isinstance(x, bytes):
        return x.decode("utf-8", errors="replace")
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (frozenset, set)):
        return sorted(to_jsonable(v) for v in x)
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if hasattr(x, "to_json"):
        return to_jsonable(x.to_json())
    if dataclasses.is_dataclass(x):
        return to_jsonable(dataclasses.asdict(x))
    raise TypeError(f"cannot serialize {type(x).__name__} into an event")


@dataclass(frozen=True)
class Event:
    event_id: int
    process: int
    kind: str
    object: str = ""
    op: str = ""
    args: Optional[list] = None
    ret: object = None
    data: Optional[dict] = None

    def to_json(self) -> dict:
        d = {"event_id": self.event_id, "process": self.process, "kind": self.kind}
        if self.object:
            d["object"] = self.object
        if self.op:
            d["op"] = self.op
        if self.kind == INVOCATION:
            d["args"] = self.args
        elif self.kind == RESPONSE:
            d["ret"] = self.ret
        elif self.kind == MARK:
            d["data"] = self.data
        return d


@dataclass
class History:
    events: list[Event] = field(default_factory=list)
    crashed: set[int] = field(default_factory=set)
    decisions: list[tuple[str, int]] = field(default_factory=list)
    seed: Optional[int] = None

    def jsonl(self) -> str:
        return "\n".join(json.dumps(e.to_json(), sort_keys=True, separators=(",", ":")) for e in self.events)

    def marks(self, object_id: Optional[str] = None) -> list[Event]:
        return [
            e
            for e in self.events
            if e.kind == MARK and (object_id is None or (e.data or {}).get("object") == object_id)
        ]

    def schedule_json(self) -> dict:
        return {"seed": self.seed, "decisions": [list(d) for d in self.decisions]}


def history_from_events(events: list[dict]) -> History:
    """Rebuild a History from exported JSON events (for offline checking)."""
    hist = History()
    for d in events:
        hist.events.append(
            Event(
                event_id=d["event_id"],
                process=d["process"],
                kind=d["kind"],
                object=d.get("object", ""),
                op=d.get("op", ""),
                args=d.get("args"),
                ret=d.get("ret"),
                data=d.get("data"),
            )
        )
        if d["kind"] == CRASH:
            hist.crashed.add(d["process"])
    hist.events.sort(key=lambda e: e.event_id)
    return hist


@dataclass(frozen=True)
class OpInstance:
    op_id: int
    process: int
    object: str
    name: str
    args: tuple
    ret: object
    inv_id: int
    res_id: Optional[int]

    @property
    def pending(self) -> bool:
        return self.res_id is None or self.ret == PENDING


def build_ops(history: History, object_id: Optional[str] = None) -> list[OpInstance]:
    """Pair invocation/response events into operation instances.

    Relies on each process having at most one open invocation per object
    level, which the runtime guarantees for recorded (top-level) calls.
    """
    open_by_proc: dict[int, dict] = {}
    ops: list[OpInstance] = []
    for e in history.events:
        if e.kind == INVOCATION:
            if e.process in open_by_proc:
                raise SimulationError(f"process {e.process} has two open invocations")
            open_by_proc[e.process] = {"inv": e}
        elif e.kind == RESPONSE:
            slot = open_by_proc.pop(e.process)
            inv = slot["inv"]
            ops.append(
                OpInstance(
                    op_id=len(ops),
                    process=e.process,
                    object=inv.object,
                    name=inv.op,
                    args=tuple(inv.args or ()),
                    ret=e.ret,
                    inv_id=inv.event_id,
                    res_id=e.event_id,
                )
            )
    for slot in open_by_proc.values():
        inv = slot["inv"]
        ops.append(
            OpInstance(
                op_id=len(ops),
                process=inv.process,
                object=inv.object,
                name=inv.op,
                args=tuple(inv.args or ()),
                ret=PENDING,
                inv_id=inv.event_id,
                res_id=None,
            )
        )
    if object_id is not None:
        ops = [o for o in ops if o.object == object_id]
        ops = [dataclasses.replace(o, op_id=i) for i, o in enumerate(ops)]
    return ops


# --- base primitives -------------------------------------------------------


@dataclass(frozen=True)
class Step:
    """One atomic access to a base primitive, to be yielded by a program."""

    prim: "Primitive"
    method: str
    args: tuple = ()
    mark: Optional[Callable[[object], Optional[dict]]] = None


class Primitive:
    def __init__(self, runtime: "Runtime", object_id: str, owner: str):
        self.runtime = runtime
        self.object_id = object_id
        self.owner = owner

    def apply(self, caller: int, method: str, args: tuple):
        raise NotImplementedError


class Register(Primitive):
    """SWMR atomic register: only the registered writer may write."""

    def __init__(self, runtime, object_id, owner, writer: int, initial=None):
        super().__init__(runtime, object_id, owner)
        self.writer = writer
        self.value = initial

    def apply(self, caller, method, args):
        if method == "read":
            return self.value
        if method == "write":
            if caller != self.writer:
                raise SimulationError(f"{self.object_id}: process {caller} is not the writer")
            self.value = args[0]
            return "ok"
        raise SimulationError(f"{self.object_id}: unknown method {method}")

    def op_read(self, ctx):
        return (yield Step(self, "read"))

    def op_write(self, ctx, v):
        return (yield Step(self, "write", (v,)))


class ConsensusCell(Primitive):
    """Atomic one-shot consensus for a fixed participant set of size <= k."""

    def __init__(self, runtime, object_id, owner, participants: frozenset[int], initial=None):
        super().__init__(runtime, object_id, owner)
        if len(participants) > runtime.consensus_k:
            raise SimulationError(
                f"{object_id}: {len(participants)} participants exceed the configured consensus power k={runtime.consensus_k}"
            )
        self.participants = participants
        self.decided = initial
        self.has_decided = initial is not None
        self.proposed_by: set[int] = set()

    def apply(self, caller, method, args):
        if method != "propose":
            raise SimulationError(f"{self.object_id}: unknown method {method}")
        if caller not in self.participants:
            raise SimulationError(f"{self.object_id}: process {caller} is not a participant")
        if caller in self.proposed_by:
            raise SimulationError(f"{self.object_id}: process {caller} proposed twice")
        self.proposed_by.add(caller)
        self.runtime.consensus_accesses.append((self.owner, self.object_id, caller))
        if not self.has_decided:
            self.decided = args[0]
            self.has_decided = True
        return self.decided

    def op_propose(self, ctx, v):
        return (yield Step(self, "propose", (v,)))


class SharedArray(Primitive):
    """Natively linearizable fixed-width array (the fast snapshot variant).

    ``update`` writes the caller's own slot (SWMR discipline); ``snapshot``
    returns the whole array atomically.
    """

    def __init__(self, runtime, object_id, owner, width: int, initial=None):
        super().__init__(runtime, object_id, owner)
        self.width = width
        self.values = [initial] * width
        self.seqs = [0] * width

    def slot_of(self, pid: int) -> int:
        if not 1 <= pid <= self.width:
            raise SimulationError(f"{self.object_id}: process {pid} has no slot")
        return pid - 1

    def apply(self, caller, method, args):
        if method == "update":
            i = self.slot_of(caller)
            self.values[i] = args[0]
            self.seqs[i] += 1
            return "ok"
        if method == "snapshot":
            return tuple(self.values)
        raise SimulationError(f"{self.object_id}: unknown method {method}")

    def op_update(self, ctx, v, mark=None):
        return (yield Step(self, "update", (v,), mark=mark))

    def op_snapshot(self, ctx):
        return (yield Step(self, "snapshot"))


class GrowArray(Primitive):
    """Index-addressed atomic array of unbounded width.

    Any process may write any slot, but once a slot holds a value, later
    writes must carry identical content (write-once-identical) unless the
    permissive policy is selected.  ``update_at`` reports whether it was the
    first write to the slot.
    """

    def __init__(self, runtime, object_id, owner, policy: str = "write-once-identical"):
        super().__init__(runtime, object_id, owner)
        self.slots: dict[int, object] = {}
        self.policy = policy

    def apply(self, caller, method, args):
        if method == "update_at":
            idx, val = args
            if idx in self.slots:
                if self.policy == "write-once-identical" and self.slots[idx] != val:
                    raise SimulationError(
                        f"{self.object_id}: conflicting contents written to slot {idx}"
                    )
                self.slots[idx] = val
                return False
            self.slots[idx] = val
            return True
        if method == "snapshot":
            return tuple(sorted(self.slots.items()))
        raise SimulationError(f"{self.object_id}: unknown method {method}")

    def op_update_at(self, ctx, idx, val, mark=None):
        return (yield Step(self, "update_at", (idx, val), mark=mark))

    def op_snapshot(self, ctx):
        return (yield Step(self, "snapshot"))


class Runtime:
    """Owns the object registry, history, and allocation/access logs."""

    def __init__(self, consensus_k: int = 1):
        self.consensus_k = consensus_k
        self.objects: dict[str, Primitive] = {}
        self.allocations: list[tuple[str, str, str]] = []  # (object_id, type, owner)
        self.consensus_accesses: list[tuple[str, str, int]] = []
        self.history = History()
        self._next_event = 0

    def _register(self, prim: Primitive):
        if prim.object_id in self.objects:
            raise SimulationError(f"duplicate object id {prim.object_id}")
        self.objects[prim.object_id] = prim
        self.allocations.append((prim.object_id, type(prim).__name__, prim.owner))
        return prim

    def new_register(self, object_id, writer, initial=None, owner=""):
        return self._register(Register(self, object_id, owner, writer, initial))

    def new_cell(self, object_id, participants, owner="", initial=None):
        return self._register(ConsensusCell(self, object_id, owner, frozenset(participants), initial))

    def new_array(self, object_id, width, initial=None, owner=""):
        return self._register(SharedArray(self, object_id, owner, width, initial))

    def new_grow_array(self, object_id, owner="", policy="write-once-identical"):
        return self._register(GrowArray(self, object_id, owner, policy))

    def consensus_cells_owned_by(self, owner_prefix: str) -> list[str]:
        return [
            oid
            for (oid, typ, owner) in self.allocations
            if typ == "ConsensusCell" and owner.startswith(owner_prefix)
        ]

    def emit(self, **kw) -> Event:
        ev = Event(event_id=self._next_event, **kw)
        self._next_event += 1
        self.history.events.append(ev)
        return ev


class Ctx:
    """Per-process handle passed to programs and object operations."""

    def __init__(self, runtime: Runtime, pid: int, local_seed: int):
        self.runtime = runtime
        self.pid = pid
        self.local_seed = local_seed

    def call(self, obj, name: str, *args):
        """Invoke a recorded (top-level) operation: emits invocation/response events."""
        self.runtime.emit(
            process=self.pid,
            kind=INVOCATION,
            object=obj.object_id,
            op=name,
            args=to_jsonable(list(args)),
        )
        ret = yield from getattr(obj, "op_" + name)(self, *args)
        self.runtime.emit(
            process=self.pid, kind=RESPONSE, object=obj.object_id, op=name, ret=to_jsonable(ret)
        )
        return ret

    def mark(self, data: dict):
        """Emit an instrumentation mark immediately (local, not a shared step)."""
        self.runtime.emit(process=self.pid, kind=MARK, data=to_jsonable(data))


# --- scheduling -------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """How to drive a run.

    seed: PRNG seed for uniform choice among enabled processes.
    decisions: explicit decision prefix, e.g. [("step", 2), ("crash", 1)].
    extend: what to do past the explicit prefix ("seed", "first" = lowest
            enabled pid, "roundrobin", "error").
    crashes: (pid, decision_index) pairs for deterministic crash injection.
    """

    seed: Optional[int] = None
    decisions: tuple = ()
    extend: str = "seed"
    crashes: tuple = ()


@dataclass(frozen=True)
class ProgramSpec:
    pid: int
    make: Callable[[Ctx], Generator]
    start_after: tuple[int, ...] = ()


def run(
    programs: Iterable[ProgramSpec],
    runtime: Runtime,
    schedule: Schedule,
    max_steps: int = 10_000,
    choice_log: Optional[list] = None,
) -> History:
    """Execute programs to completion under the schedule; return the history.

    Raises BudgetExceeded if any live process is still running after
    ``max_steps`` shared accesses (every implemented algorithm is wait-free,
    so hitting the budget signals a bug).  Crashed processes stop silently
    and keep their pending invocation unresponded.
    """
    programs = list(programs)
    specs = {p.pid: p for p in programs}
    if len(specs) != len(programs):
        raise ValueError("duplicate pids")
    rng = random.Random(schedule.seed)
    crash_at: dict[int, list[int]] = {}
    for pid, at in schedule.crashes:
        crash_at.setdefault(at, []).append(pid)

    gens: dict[int, Generator] = {}
    inbox: dict[int, object] = {}
    started: set[int] = set()
    finished: set[int] = set()
    crashed: set[int] = set()
    hist = runtime.history
    hist.seed = schedule.seed
    steps = 0
    rr_last = 0

    def enabled_pids():
        out = []
        for pid in sorted(specs):
            if pid in finished or pid in crashed:
                continue
            if all(d in finished for d in specs[pid].start_after):
                out.append(pid)
        return out

    def crash(pid: int):
        crashed.add(pid)
        hist.crashed.add(pid)
        if pid in gens:
            gens[pid].close()
        runtime.emit(process=pid, kind=CRASH)

    def advance(pid: int):
        nonlocal steps
        if pid not in started:
            started.add(pid)
            ctx = Ctx(runtime, pid, local_seed=((schedule.seed or 0) * 1_000_003 + pid))
            gens[pid] = specs[pid].make(ctx)
            sendable = None
        else:
            sendable = inbox[pid]
        try:
            step = gens[pid].send(sendable)
        except StopIteration:
            finished.add(pid)
            return
        if not isinstance(step, Step):
            raise SimulationError(f"process {pid} yielded {step!r}, expected a Step")
        result = step.prim.apply(pid, step.method, step.args)
        steps += 1
        if step.mark is not None:
            data = step.mark(result)
            if data is not None:
                for d in data if isinstance(data, list) else [data]:
                    runtime.emit(process=pid, kind=MARK, data=to_jsonable(d))
        inbox[pid] = result

    while True:
        live = enabled_pids()
        if not live:
            break
        i = len(hist.decisions)
        if i < len(schedule.decisions):
            kind, pid = schedule.decisions[i]
            if kind == "crash":
                if pid in finished or pid in crashed:
                    raise SimulationError(f"replay decision crashes dead process {pid}")
                hist.decisions.append(("crash", pid))
                crash(pid)
                continue
            if pid not in live:
                raise SimulationError(f"replay decision names disabled process {pid}")
        elif (
            due := sorted(
                (at, p)
                for at, ps in crash_at.items()
                for p in ps
                if at <= i and p not in finished and p not in crashed
            )
        ):
            at, pid = due[0]
            crash_at[at].remove(pid)
            hist.decisions.append(("crash", pid))
            crash(pid)
            continue
        elif schedule.extend == "seed":
            pid = live[rng.randrange(len(live))]
        elif schedule.extend == "first":
            pid = live[0]
        elif schedule.extend == "roundrobin":
            nxt = [p for p in live if p > rr_last]
            pid = (nxt or live)[0]
            rr_last = pid
        else:
            raise SimulationError("explicit decision list exhausted")
        if choice_log is not None:
            choice_log.append(list(live))
        if steps >= max_steps:
            raise BudgetExceeded(f"step budget {max_steps} exhausted with live processes {live}")
        hist.decisions.append(("step", pid))
        advance(pid)
    return hist


def enumerate_runs(build: Callable[[], tuple], max_steps: int = 10_000, limit: Optional[int] = None):
    """Exhaustively enumerate every interleaving of a scenario.

    ``build`` must return a fresh (runtime, programs) pair on every call.
    Yields (decisions, history) for each maximal schedule, via depth-first
    search over the decision tree (odometer over the per-decision choice
    sets, re-executing from scratch on every leaf; scenarios are small
    enough that this stays cheap).
    """
    prefix: list[tuple[str, int]] = []
    produced = 0
    while True:
        runtime, programs = build()
        choices: list[list[int]] = []
        hist = run(
            programs,
            runtime,
            Schedule(decisions=tuple(prefix), extend="first"),
            max_steps=max_steps,
            choice_log=choices,
        )
        decisions = list(hist.decisions)
        yield decisions, hist
        produced += 1
        if limit is not None and produced >= limit:
            return
        # back up to the deepest decision point with an unexplored branch
        step_decisions = [(i, d) for i, d in enumerate(decisions) if d[0] == "step"]
        assert len(step_decisions) == len(choices)
        next_prefix = None
        for j in range(len(choices) - 1, -1, -1):
            i, (_, pid) = step_decisions[j]
            options = choices[j]
            k = options.index(pid)
            if k + 1 < len(options):
                next_prefix = decisions[:i] + [("step", options[k + 1])]
                break
        if next_prefix is None:
            return
        prefix = next_prefix
