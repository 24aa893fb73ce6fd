"""Consensus built from the higher-level objects (the lower-bound programs).

Each class wraps one shared object (plus registers/snapshots, which add no
consensus power) and exposes a single ``propose``; campaigns then audit the
standard Validity / Agreement / Termination trio over recorded histories.

The deny-list reduction proves the sentinel value un-denied, denies it,
re-proves until the denial bites (the progress property guarantees it
will), and reads the now-frozen set of successful provers, which
anti-flickering makes identical for everyone.  A deterministic selector
over that set plus a proposal board yields the decision.
"""
from __future__ import annotations

from . import crypto
from .apps.evote import Ballot
from .apps.transfer import TokenMaterial, uncommit

SENTINEL = "0"


def selector_min(processes) -> int:
    """f: any nonempty process set -> one member.  Any deterministic rule works."""
    return min(processes)


def separator(records) -> set[int]:
    return {rec.prover for rec in records}


class DenyListConsensus:
    """k-consensus from one k-deny-list and one snapshot array (Pi = managers = verifiers).

    The loop runs until a prove comes back invalid; the pseudocode's exit
    condition is written the other way around, but only loop-until-invalid
    matches the surrounding argument (the decision must wait for the denial
    to be visible to everyone).
    """

    def __init__(self, runtime, object_id: str, cfg, dlist, proposals):
        self.object_id = object_id
        self.cfg = cfg
        self.dlist = dlist
        self.proposals = proposals

    def op_propose(self, ctx, v):
        yield from self.proposals.op_update(ctx, v)
        yield from self.dlist.op_prove(ctx, SENTINEL)
        yield from self.dlist.op_append(ctx, SENTINEL)
        while True:
            ret = yield from self.dlist.op_prove(ctx, SENTINEL)
            if ret is False:
                break
        records = yield from self.dlist.op_read(ctx)
        processes = separator(records)
        chosen = selector_min(processes)
        view = yield from self.proposals.op_snapshot(ctx)
        decided = view[self.cfg.slot(chosen)]
        ctx.mark({"object": self.object_id, "lin": "decide", "value": decided, "prover": ctx.pid})
        return decided


class AnonTransferConsensus:
    """k-consensus from a k-anonymous-transfer object.

    k+1 wallets: the first k share the material of a single token, the
    (k+1)-th is an uncontrolled sink.  Exactly one transfer of the shared
    token can succeed; every proposer publishes its oracle seed and value,
    then recognizes the winner by un-committing the public transfer
    evidence against each published seed.
    """

    def __init__(
        self,
        runtime,
        object_id: str,
        cfg,
        at,
        shared_token: TokenMaterial,
        sink_pk: str,
        seeds: dict,
        seed_board,
        value_board,
    ):
        self.object_id = object_id
        self.cfg = cfg
        self.at = at
        self.shared_token = shared_token
        self.sink_pk = sink_pk
        self.seeds = seeds  # pid -> oracle seed
        self._seed_board = seed_board
        self._value_board = value_board

    def op_propose(self, ctx, v):
        seed = self.seeds[ctx.pid]
        yield from self._seed_board.op_update(ctx, seed)
        yield from self._value_board.op_update(ctx, v)
        yield from self.at.op_transfer(ctx, self.shared_token, self.sink_pk, self.shared_token.secret, seed)
        evidence = yield from self.at.op_spend_evidence(ctx, self.shared_token)
        seeds_view = yield from self._seed_board.op_snapshot(ctx)
        values_view = yield from self._value_board.op_snapshot(ctx)
        hits = []
        for pid in self.cfg.pids:
            owner = uncommit(self.at.oracle_tag, seeds_view[self.cfg.slot(pid)], self.shared_token, evidence)
            if owner is not None:
                hits.append(pid)
        ctx.mark({"object": self.object_id, "lin": "uncommit-scan", "hits": hits, "prover": ctx.pid})
        if not hits:
            return False
        decided = values_view[self.cfg.slot(hits[0])]
        ctx.mark({"object": self.object_id, "lin": "decide", "value": decided, "prover": ctx.pid})
        return decided


class EVoteConsensus:
    """k-consensus from one e-vote object whose only authorized token is the sentinel.

    Every proposer votes the shared pre-issued token with its own value;
    unicity of the vote makes the count agree.  The count is re-read until
    nonempty: a proposer whose vote lost still decides once the winning
    server's count lands (guaranteed crash-free; a crashed winner can leave
    losers spinning, which the step budget surfaces).
    """

    def __init__(self, runtime, object_id: str, evote, signature: crypto.BlindSignature, nonce: str = SENTINEL):
        self.object_id = object_id
        self.evote = evote
        self.signature = signature
        self.nonce = nonce

    def op_propose(self, ctx, v):
        ballot = Ballot(signature=self.signature, nonce=self.nonce, choice=v)
        yield from self.evote.op_vote(ctx, ballot)
        while True:
            entries = yield from self.evote.op_vote_count(ctx)
            if entries:
                break
        decided = entries[0][1]
        ctx.mark({"object": self.object_id, "lin": "decide", "value": decided, "prover": ctx.pid})
        return decided
