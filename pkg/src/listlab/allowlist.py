"""Allow-list object over two snapshot arrays; no consensus anywhere.

One array holds each manager's ever-growing set of listed values, the other
holds each verifier's ever-growing set of published membership proofs.
APPEND linearizes at its slot update, a valid PROVE at its proof-slot
update, READ at its snapshot.  Because every slot is single-writer and the
arrays are snapshot objects, no synchronization beyond registers is needed.
"""
from __future__ import annotations

from . import crypto, model
from .sim import Runtime
from .snapshot import make_snapshot


class AllowListObject:
    kind = model.Kind.ALLOWLIST

    def __init__(
        self,
        runtime: Runtime,
        object_id: str,
        cfg: model.SystemConfig,
        proof_mode: str = crypto.EXPLICIT,
        snapshot_impl: str = "native",
        initial_listed: frozenset = frozenset(),
    ):
        self.object_id = object_id
        self.cfg = cfg
        self.proof_mode = proof_mode
        # genesis values appear in every slot; the union is unaffected by which
        # slot carries them and slots still only grow
        self.listed = make_snapshot(
            runtime, f"{object_id}.lv", cfg.n, impl=snapshot_impl, initial=frozenset(initial_listed), owner=object_id
        )
        self.board = make_snapshot(
            runtime, f"{object_id}.proofs", cfg.n, impl=snapshot_impl, initial=(), owner=object_id
        )

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
        view = yield from self.listed.op_snapshot(ctx)
        listed = frozenset().union(*view)
        if v not in listed:
            return False
        blob = crypto.prove_membership(v, listed, mode=self.proof_mode, tag=self.object_id)
        board_view = yield from self.board.op_snapshot(ctx)
        mine = board_view[self.cfg.slot(ctx.pid)]
        rec = model.ProofRecord(prover=ctx.pid, applied_set=listed, proof=blob, label=(ctx.pid, len(mine)))
        yield from self.board.op_update(
            ctx,
            mine + (rec,),
            mark=lambda _r: {"object": self.object_id, "lin": "prove-valid", "value": v, "prover": ctx.pid},
        )
        return [sorted(listed), blob]

    def op_read(self, ctx):
        view = yield from self.board.op_snapshot(ctx)
        # flatten in (prover id, per-slot insertion index) order: slots are
        # already per-pid and each slot tuple is in insertion order
        return [rec for slot in view for rec in slot]

    def op_listed(self, ctx):
        """Union of the listed-values slots (internal read surface for composites)."""
        view = yield from self.listed.op_snapshot(ctx)
        return frozenset().union(*view)
