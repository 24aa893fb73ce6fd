"""Blind-signature voting over one deny-list and two snapshot arrays.

A ballot's token (signed nonce) is one-time: voting appends it to the
deny-list, and the deny-list's anti-flickering makes "has this token been
used" settle identically for every server.  A server first advertises its
(token, choice) pair in a pre-vote array so that concurrent servers for the
same token can detect disagreement before anything is counted.

Two conflict rules for concurrent same-token votes with different choices:
``reject`` follows the algorithm literally (everyone returns false, nothing
is counted); ``choose-min`` is the deterministic-choice variant where all
servers count the same minimal choice.  The consensus reduction needs the
latter, since with ``reject`` a split vote decides nothing.
"""
from __future__ import annotations

from dataclasses import dataclass

from .. import crypto
from ..sim import Runtime
from ..snapshot import make_snapshot


@dataclass(frozen=True)
class Ballot:
    signature: crypto.BlindSignature
    nonce: str
    choice: str

    def to_json(self) -> dict:
        return {"signature": self.signature.to_json(), "nonce": self.nonce, "choice": self.choice}


def make_ballot(scheme: crypto.BlindSignatureScheme, nonce: str, blinding: str, choice: str) -> Ballot:
    sig = crypto.blind_sign_roundtrip(nonce, scheme, blinding)
    return Ballot(signature=sig, nonce=nonce, choice=choice)


class EVoteObject:
    def __init__(
        self,
        runtime: Runtime,
        object_id: str,
        dl,
        cfg,
        issuer_public: str,
        conflict_rule: str = "reject",
        snapshot_impl: str = "native",
    ):
        if conflict_rule not in ("reject", "choose-min"):
            raise ValueError(f"unknown conflict rule {conflict_rule!r}")
        self.object_id = object_id
        self.dl = dl
        self.cfg = cfg
        self.issuer_public = issuer_public
        self.conflict_rule = conflict_rule
        self.prevote = make_snapshot(
            runtime, f"{object_id}.prevote", cfg.n, impl=snapshot_impl, initial=None, owner=object_id
        )
        self.votes = make_snapshot(
            runtime, f"{object_id}.votes", cfg.n, impl=snapshot_impl, initial=frozenset(), owner=object_id
        )

    def op_vote(self, ctx, ballot: Ballot):
        if not crypto.blind_verify(ballot.signature, ballot.nonce, self.issuer_public):
            return False
        yield from self.prevote.op_update(ctx, (ballot.nonce, ballot.choice))
        ret = yield from self.dl.op_prove(ctx, ballot.nonce)
        if ret is False:
            return False
        yield from self.dl.op_append(ctx, ballot.nonce)
        while True:
            ret = yield from self.dl.op_prove(ctx, ballot.nonce)
            if ret is False:
                break
        records = yield from self.dl.op_read(ctx)
        tok_c = crypto.commit(ballot.nonce, self.dl.object_id)
        voters = tuple(sorted({r.prover for r in records if r.label[2] == tok_c}))
        pv = yield from self.prevote.op_snapshot(ctx)
        values = sorted(
            {
                pv[self.cfg.slot(q)][1]
                for q in voters
                if pv[self.cfg.slot(q)] is not None and pv[self.cfg.slot(q)][0] == ballot.nonce
            }
        )
        if self.conflict_rule == "reject":
            if values != [ballot.choice]:
                return False
            counted = ballot.choice
        else:
            counted = values[0]
        mine_view = yield from self.votes.op_snapshot(ctx)
        mine = mine_view[self.cfg.slot(ctx.pid)]
        entry = (ballot.nonce, counted, voters)
        yield from self.votes.op_update(
            ctx,
            mine | {entry},
            mark=lambda _r: {
                "object": self.object_id,
                "lin": "vote-counted",
                "token": ballot.nonce,
                "value": counted,
                "prover": ctx.pid,
            },
        )
        return True

    def op_vote_count(self, ctx):
        view = yield from self.votes.op_snapshot(ctx)
        # one occurrence of each (token, value, voters) tuple
        return sorted({entry for slot in view for entry in slot})
