"""Linearizability checking and history scanners.

``check`` decides, exactly, whether a recorded history of one object is
equivalent to some legal sequential history that extends the real-time
order: a depth-first search over order-respecting schedules, pruned by
memoizing (completed-op-set, sequential-state) pairs.  Pending invocations
may either take effect (with a response the spec permits at that point,
including record contents recovered from later READ responses) or be
dropped, mirroring history completion.

The scanners are deliberately simpler: they read the constructions'
instrumented linearization-point marks and test one property each
(anti-flickering, progress).  ``check`` itself never looks at marks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from . import crypto, model
from .sim import Event, History, INVOCATION, MARK, OpInstance, PENDING, build_ops


class CheckBoundExceeded(Exception):
    pass


@dataclass
class Verdict:
    linearizable: bool
    witness: Optional[list[int]] = None
    violation: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "linearizable": self.linearizable,
            "witness": self.witness,
            "violation": self.violation,
        }


class SequentialSpec:
    """A deterministic sequential object the checker replays against."""

    def initial(self):
        raise NotImplementedError

    def state_key(self, state):
        raise NotImplementedError

    def apply(self, state, op: OpInstance):
        """Successor state if the recorded (op, response) is legal here, else None."""
        raise NotImplementedError

    def pending_effects(self, state, op: OpInstance) -> list:
        """Candidate successor states for a pending op taking effect here."""
        raise NotImplementedError


class ProofListSpec(SequentialSpec):
    def __init__(self, cfg: model.SystemConfig, kind: model.Kind, tag: str = "", proof_mode: str = crypto.EXPLICIT):
        self.cfg = cfg
        self.kind = kind
        self.tag = tag
        self.proof_mode = proof_mode
        self._hints: dict[tuple, list] = {}

    def load_read_hints(self, ops: list[OpInstance]):
        """Index records seen in READ responses by (prover, value commitment).

        A pending PROVE that crashed after publication can then be completed
        with the exact record the rest of the history observed.
        """
        self._hints = {}
        seen = set()
        for o in ops:
            if o.name != "read" or o.ret in (PENDING, False) or not isinstance(o.ret, (list, tuple)):
                continue
            for rec in o.ret:
                try:
                    key = model.record_key(rec)
                except (TypeError, KeyError):
                    continue
                if key in seen:
                    continue
                seen.add(key)
                idx = (rec["prover"], rec["proof"]["body"][0] if rec["proof"]["mode"] == crypto.MOCK_ZK else crypto.commit(rec["proof"]["body"][0], rec["proof"]["tag"]))
                self._hints.setdefault(idx, []).append(rec)

    def initial(self):
        return model.SeqState()

    def state_key(self, state):
        return state.key()

    def apply(self, state, op: OpInstance):
        return model.replay_op(state, op.process, (op.name, *op.args), op.ret, self.cfg, self.kind, tag=self.tag)

    def pending_effects(self, state, op: OpInstance) -> list:
        if op.name == "read":
            return []
        if op.name == "append":
            s2, _ = model.apply_op(state, op.process, (op.name, *op.args), self.cfg, self.kind, self.proof_mode, self.tag)
            return [s2]
        if op.name == "prove":
            outs = []
            keys = set()
            v = op.args[0]
            for rec in self._hints.get((op.process, crypto.commit(v, self.tag)), []):
                s2 = model.replay_op(
                    state, op.process, ("prove", v), [rec["applied_set"], rec["proof"]], self.cfg, self.kind, tag=self.tag
                )
                if s2 is not None and s2.key() not in keys:
                    keys.add(s2.key())
                    outs.append(s2)
            s2, _ = model.apply_op(state, op.process, ("prove", v), self.cfg, self.kind, self.proof_mode, self.tag)
            if s2.key() not in keys:
                outs.append(s2)
            return outs
        raise ValueError(f"unknown op {op.name}")


class ArraySpec(SequentialSpec):
    """Sequential spec of the snapshot array: per-slot update, atomic read-all."""

    def __init__(self, width: int, initial=None):
        self.width = width
        self.initial_value = initial

    def initial(self):
        return tuple([self.initial_value] * self.width)

    def state_key(self, state):
        return state

    def apply(self, state, op: OpInstance):
        if op.name == "update":
            if op.ret != "ok":
                return None
            s = list(state)
            s[op.process - 1] = op.args[0]
            return tuple(s)
        if op.name == "snapshot":
            return state if list(op.ret) == list(state) else None
        raise ValueError(f"unknown op {op.name}")

    def pending_effects(self, state, op: OpInstance) -> list:
        if op.name == "update":
            s = list(state)
            s[op.process - 1] = op.args[0]
            return [tuple(s)]
        return []


class ConsensusSpec(SequentialSpec):
    def initial(self):
        return None

    def state_key(self, state):
        return state

    def apply(self, state, op: OpInstance):
        if op.name != "propose":
            raise ValueError(f"unknown op {op.name}")
        decided = state if state is not None else op.args[0]
        return decided if op.ret == decided else None

    def pending_effects(self, state, op: OpInstance) -> list:
        return [state if state is not None else op.args[0]]


def precedence(ops: list[OpInstance]) -> dict[int, frozenset[int]]:
    """preds[i] = ops whose response precedes op i's invocation (must linearize first)."""
    preds = {}
    for o in ops:
        preds[o.op_id] = frozenset(
            p.op_id for p in ops if p.res_id is not None and p.res_id < o.inv_id
        )
    return preds


def check(ops: list[OpInstance], spec: SequentialSpec, bound: int = 20) -> Verdict:
    if len(ops) > bound:
        raise CheckBoundExceeded(f"history has {len(ops)} operations, bound is {bound}")
    if isinstance(spec, ProofListSpec):
        spec.load_read_hints(ops)
    preds = precedence(ops)
    must_do = frozenset(o.op_id for o in ops if not o.pending)
    by_id = {o.op_id: o for o in ops}
    seen: set = set()
    best: list[tuple[int, ...]] = [()]

    def dfs(state, done: frozenset, order: tuple):
        if must_do <= done:
            return order
        key = (done, spec.state_key(state))
        if key in seen:
            return None
        seen.add(key)
        if len(order) > len(best[0]):
            best[0] = order
        for oid in sorted(by_id):
            if oid in done or not preds[oid] <= done:
                continue
            o = by_id[oid]
            if o.pending:
                nexts = spec.pending_effects(state, o)
            else:
                s2 = spec.apply(state, o)
                nexts = [s2] if s2 is not None else []
            for s2 in nexts:
                r = dfs(s2, done | {oid}, order + (oid,))
                if r is not None:
                    return r
        return None

    witness = dfs(spec.initial(), frozenset(), ())
    if witness is not None:
        return Verdict(True, witness=list(witness))
    return Verdict(
        False,
        violation=f"no legal linearization of {len(ops)} operations; longest legal prefix: {list(best[0])}",
    )


def brute_force_check(ops: list[OpInstance], spec: SequentialSpec) -> bool:
    """Independent oracle: completions x permutations, no pruning. Small histories only."""
    if isinstance(spec, ProofListSpec):
        spec.load_read_hints(ops)
    preds = precedence(ops)
    completes = [o for o in ops if not o.pending]
    pendings = [o for o in ops if o.pending]

    def order_ok(perm):
        # preds only ever contains completed ops, which are always in the pool
        pos = {o.op_id: i for i, o in enumerate(perm)}
        return all(pos[a] < pos[o.op_id] for o in perm for a in preds[o.op_id])

    def replay(perm, i, state):
        if i == len(perm):
            return True
        o = perm[i]
        if o.pending:
            return any(replay(perm, i + 1, s2) for s2 in spec.pending_effects(state, o))
        s2 = spec.apply(state, o)
        return s2 is not None and replay(perm, i + 1, s2)

    for r in range(len(pendings) + 1):
        for kept in itertools.combinations(pendings, r):
            pool = completes + list(kept)
            for perm in itertools.permutations(pool):
                if order_ok(perm) and replay(perm, 0, spec.initial()):
                    return True
    return False


def complete_history(history: History) -> list[History]:
    """All completions: each pending invocation dropped or kept-with-effect.

    Kept pending operations get a synthetic response whose value is the
    PENDING sentinel; the checker treats that response as "whatever the
    sequential object permits at the chosen point".
    """
    ops = build_ops(history)
    pendings = [o for o in ops if o.pending]
    if not pendings:
        return [history]
    out = []
    for r in range(len(pendings) + 1):
        for kept in itertools.combinations(pendings, r):
            kept_inv = {o.inv_id for o in kept}
            drop_inv = {o.inv_id for o in pendings if o not in kept}
            events = [e for e in history.events if not (e.kind == INVOCATION and e.event_id in drop_inv)]
            h = History(events=list(events), crashed=set(history.crashed), seed=history.seed)
            for o in kept:
                h.events.append(
                    Event(
                        event_id=len(history.events) + len(h.events),
                        process=o.process,
                        kind="response",
                        object=o.object,
                        op=o.name,
                        ret=PENDING,
                    )
                )
            out.append(h)
    return out


# --- scanners ---------------------------------------------------------------


def scan_anti_flickering(history: History, object_id: str, verifiers) -> bool:
    """Per value: PROVE outcomes ordered by linearization point must be valid*, invalid*.

    Valid operations linearize at their instrumented publication mark;
    invalid operations at their response.  A valid response without a mark
    (possible only in broken variants) falls back to its response position.
    """
    marks = []
    for e in history.events:
        if e.kind == MARK and (e.data or {}).get("object") == object_id and e.data.get("lin") == "prove-valid":
            marks.append({"pos": e.event_id, "value": e.data["value"], "prover": e.data["prover"], "used": False})
    timeline: dict[str, list[tuple[int, bool]]] = {}
    for o in build_ops(history, object_id):
        if o.name != "prove" or o.process not in verifiers:
            continue
        v = o.args[0]
        if o.ret is False:
            timeline.setdefault(v, []).append((o.res_id, False))
        else:
            mine = [m for m in marks if not m["used"] and m["value"] == v and m["prover"] == o.process]
            if mine:
                mine[0]["used"] = True
                timeline.setdefault(v, []).append((mine[0]["pos"], True))
            elif o.ret != PENDING:
                timeline.setdefault(v, []).append((o.res_id, True))
    for m in marks:
        if not m["used"]:
            # helped publication for a crashed prover still linearizes
            timeline.setdefault(m["value"], []).append((m["pos"], True))
    for v, entries in timeline.items():
        entries.sort()
        seen_invalid = False
        for _, valid in entries:
            if not valid:
                seen_invalid = True
            elif seen_invalid:
                return False
    return True


def scan_progress(history: History, object_id: str, kind: model.Kind, verifiers) -> bool:
    """After APPEND(x) returns true, PROVE(x) invoked later has its final validity."""
    ops = build_ops(history, object_id)
    for a in ops:
        if a.name != "append" or a.ret is not True:
            continue
        x = a.args[0]
        for p in ops:
            if p.name != "prove" or p.args[0] != x or p.process not in verifiers:
                continue
            if p.inv_id < a.res_id or p.ret == PENDING:
                continue
            valid = p.ret is not False
            if kind == model.Kind.ALLOWLIST and not valid:
                return False
            if kind == model.Kind.DENYLIST and valid:
                return False
    return True
