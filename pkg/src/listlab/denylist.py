"""Deny-list object: snapshot arrays plus an array of k-consensus cells.

APPEND and READ mirror the allow-list.  PROVE is where the anti-flickering
property is earned:

  * the prover publishes a (timestamp, commitment) entry in a queue array;
  * every prover drains the queue oldest-first (timestamps are (counter,
    pid) pairs under their natural total order), proposing (entry, current
    listed-values union) to one consensus cell per slot, so all verifiers
    agree on which queued entry owns each slot and which value set it was
    evaluated against;
  * the per-slot value sets only grow, and any prover of the same value
    (equal commitment) publishes the winner's non-membership proof on its
    behalf -- the helping that lets a crashed prover's operation linearize.

A valid PROVE linearizes at the first write to its slot on the proof board;
publication is keyed by slot index, so racing helpers write identical
content and the board keeps a single record per slot.

The ``use_consensus=False`` variant replaces the consensus cells with each
prover's local choice.  It is a negative control: without agreement on the
evaluation sets, concurrent provers can order an append differently and the
anti-flickering scanner catches the resulting flicker.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto, model
from .sim import Runtime, SimulationError
from .snapshot import make_snapshot


@dataclass
class _Local:
    counter: int = 0
    evaluated: set = field(default_factory=set)


class DenyListObject:
    kind = model.Kind.DENYLIST

    def __init__(
        self,
        runtime: Runtime,
        object_id: str,
        cfg: model.SystemConfig,
        proof_mode: str = crypto.EXPLICIT,
        snapshot_impl: str = "native",
        use_consensus: bool = True,
    ):
        self.runtime = runtime
        self.object_id = object_id
        self.cfg = cfg
        self.proof_mode = proof_mode
        self.use_consensus = use_consensus
        self.k = len(cfg.verifiers)
        self.listed = make_snapshot(
            runtime, f"{object_id}.lv", cfg.n, impl=snapshot_impl, initial=frozenset(), owner=object_id
        )
        self.queue = make_snapshot(
            runtime, f"{object_id}.queue", cfg.n, impl=snapshot_impl, initial=None, owner=object_id
        )
        # slot-indexed proof board: helpers racing on one slot write identical
        # records, so write-once-identical is both safe and an invariant check
        self.board = runtime.new_grow_array(
            f"{object_id}.proofs",
            owner=object_id,
            policy="write-once-identical" if use_consensus else "overwrite",
        )
        self._cells: dict[int, object] = {}
        self._locals: dict[int, _Local] = {}

    def _cell(self, idx: int):
        if idx not in self._cells:
            self._cells[idx] = self.runtime.new_cell(
                f"{self.object_id}.cons{idx}", self.cfg.verifiers, owner=self.object_id
            )
        return self._cells[idx]

    def _local(self, pid: int) -> _Local:
        return self._locals.setdefault(pid, _Local())

    def op_append(self, ctx, v: str):
        if not (self.cfg.universe.contains(v) and ctx.pid in self.cfg.managers):
            return False
        view = yield from self.listed.op_snapshot(ctx)
        mine = view[self.cfg.slot(ctx.pid)]
        yield from self.listed.op_update(
            ctx,
            mine | {v},
            mark=lambda _r: {"object": self.object_id, "lin": "append", "value": v, "prover": ctx.pid},
        )
        return True

    def op_prove(self, ctx, v: str):
        if ctx.pid not in self.cfg.verifiers:
            return False
        local = self._local(ctx.pid)
        c_v = crypto.commit(v, self.object_id)
        own_ts = (local.counter, ctx.pid)
        entry = (own_ts, c_v)
        yield from self.queue.op_update(ctx, entry)
        qview = yield from self.queue.op_snapshot(ctx)
        queue = {e for e in qview if e is not None and e[0] not in local.evaluated}
        max_iters = len(queue) + self.k  # own entry + one late-enqueued older entry per peer
        iters = 0
        own_val = None
        own_blob = None
        while any(ts == own_ts for ts, _c in queue):
            iters += 1
            if iters > max_iters:
                raise SimulationError(f"{self.object_id}: PROVE loop exceeded its wait-free bound")
            oldest = min(queue)
            lv_view = yield from self.listed.op_snapshot(ctx)
            prop = (oldest, frozenset().union(*lv_view))
            idx = local.counter
            if self.use_consensus:
                winner, val = yield from self._cell(idx).op_propose(ctx, prop)
            else:
                winner, val = prop
            w_ts, w_commit = winner
            if w_commit == c_v and v not in val:
                blob = crypto.prove_nonmembership(v, val, mode=self.proof_mode, tag=self.object_id)
                rec = model.ProofRecord(
                    prover=w_ts[1], applied_set=val, proof=blob, label=(idx, w_ts, w_commit)
                )
                yield from self.board.op_update_at(
                    ctx,
                    idx,
                    rec,
                    mark=lambda first, v=v, idx=idx, w=w_ts: (
                        {
                            "object": self.object_id,
                            "lin": "prove-valid",
                            "value": v,
                            "prover": w[1],
                            "slot": idx,
                        }
                        if first
                        else None
                    ),
                )
                if w_ts == own_ts:
                    own_blob = blob
            if w_ts == own_ts:
                own_val = val
            local.evaluated.add(w_ts)
            queue = {e for e in queue if e[0] != w_ts}
            local.counter += 1
        if v not in own_val:
            return [sorted(own_val), own_blob]
        return False

    def op_read(self, ctx):
        view = yield from self.board.op_snapshot(ctx)
        return [rec for _idx, rec in view]

    def op_listed(self, ctx):
        view = yield from self.listed.op_snapshot(ctx)
        return frozenset().union(*view)
