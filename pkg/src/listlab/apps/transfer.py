"""Token-based anonymous asset transfer over one allow-list and one deny-list.

The allow-list is the existence registry (a token id must be listed before
it can be spent: no ex-nihilo creation); the deny-list records spends (a
token's spend tag can be proven un-denied only until the first transfer
lands: no double spending).  A transfer destroys the source token and
activates a fresh one whose secrets only the recipient can derive, so
token usages are unlinkable.

Every spend of a given source token maps to the *same* deterministic spend
tag, which is what makes racing transfers collide on the deny-list and lets
its commitment-keyed helping arbitrate them; the race is then settled by a
deterministic leader choice over the fixed set of successful spend proofs.
"""
from __future__ import annotations

from dataclasses import dataclass

from .. import crypto
from ..sim import Runtime
from ..snapshot import make_snapshot


class NotRepresentable(Exception):
    pass


def discretize(balance: int, unit: int, slots: int) -> list[int]:
    """Split a balance into ``slots`` token amounts, each 0 or ``unit``.

    Canonical placement puts the full tokens first, which makes the map a
    bijection between balances and slot arrays.
    """
    if unit <= 0:
        raise NotRepresentable("unit amount must be positive")
    if balance < 0 or balance % unit != 0:
        raise NotRepresentable(f"balance {balance} is not a multiple of the unit {unit}")
    count = balance // unit
    if count > slots:
        raise NotRepresentable(f"balance {balance} needs {count} tokens but only {slots} slots exist")
    return [unit] * count + [0] * (slots - count)


def anonymity_set_size(wallet_map: dict, pid: int) -> int:
    """Number of wallets a given process may transfer for."""
    return sum(1 for procs in wallet_map.values() if pid in procs)


@dataclass(frozen=True)
class TokenMaterial:
    token_id: str
    secret: str

    def to_json(self) -> dict:
        return {"token_id": self.token_id, "secret": self.secret}


def mint_token(label: str, oracle_tag: str) -> TokenMaterial:
    return TokenMaterial(
        token_id=crypto._h("token-id", oracle_tag, label),
        secret=crypto._h("token-secret", oracle_tag, label),
    )


@dataclass(frozen=True)
class PourTx:
    """Local output of a transfer: everything needed to destroy T_O and mint T_R.

    Deterministic in (source token, recipient key, sender secret, oracle
    seed).  ``spend_tag`` depends only on the source token, so two spends of
    the same token collide; ``binding`` commits to the sender's oracle seed,
    so the seed owner can later be recognized without being revealed.
    """

    spend_tag: str
    new_token: TokenMaterial
    binding: str
    parent_id: str
    seal: str

    def to_json(self) -> dict:
        return {
            "spend_tag": self.spend_tag,
            "new_token": self.new_token.to_json(),
            "binding": self.binding,
            "parent_id": self.parent_id,
            "seal": self.seal,
        }


def _tx_seal(spend_tag, new_token, binding, parent_id):
    return crypto._h("tx-seal", spend_tag, new_token.token_id, new_token.secret, binding, parent_id)


def pour(t_o: TokenMaterial, pk_r: str, sk_s: str, seed: str, oracle_tag: str) -> PourTx:
    new_token = TokenMaterial(
        token_id=crypto._h("pour-id", oracle_tag, t_o.token_id, pk_r, seed),
        secret=crypto._h("pour-secret", oracle_tag, sk_s, pk_r, seed),
    )
    spend_tag = crypto.commit(t_o.token_id, "spend|" + oracle_tag)
    binding = crypto.commit(seed + "|" + t_o.token_id, "bind|" + oracle_tag)
    return PourTx(
        spend_tag=spend_tag,
        new_token=new_token,
        binding=binding,
        parent_id=t_o.token_id,
        seal=_tx_seal(spend_tag, new_token, binding, t_o.token_id),
    )


def verify_tx(tx: PourTx) -> bool:
    return tx.seal == _tx_seal(tx.spend_tag, tx.new_token, tx.binding, tx.parent_id)


def spend_tag_of(t_o: TokenMaterial, oracle_tag: str) -> str:
    return crypto.commit(t_o.token_id, "spend|" + oracle_tag)


def advertised(tx: PourTx) -> dict:
    # the public face of a transfer: commitments and the fresh id only
    return {"spend_tag": tx.spend_tag, "binding": tx.binding, "new_id": tx.new_token.token_id}


def choose_leader(read_result, t_r=None) -> int:
    """Deterministic leader among the provers in ``read_result``.

    Order-independent: minimum (process id, timestamp) wins.  The t_r
    argument is accepted for interface parity but plays no role in the
    choice beyond the caller having pre-matched the records to its transfer.
    """
    cands = sorted((rec.prover, tuple(rec.label[1])) for rec in read_result)
    if not cands:
        raise ValueError("no candidate spend proof to choose a leader from")
    return cands[0][0]


def uncommit(oracle_tag: str, seed, token_mat: TokenMaterial, evidence) -> int | None:
    """Recover the winning transfer's owner if ``seed`` produced it, else None.

    Local function over public evidence: the leader of the fixed spend-proof
    set plus the advertised transfer whose binding commitment matches the
    seed.
    """
    if seed is None or not evidence or not evidence.get("candidates"):
        return None
    leader = choose_leader(evidence["candidates"])
    ad = evidence["ads"][leader - 1]
    if not ad:
        return None
    expected = crypto.commit(seed + "|" + token_mat.token_id, "bind|" + oracle_tag)
    return leader if ad["binding"] == expected else None


class AnonAssetTransfer:
    def __init__(
        self,
        runtime: Runtime,
        object_id: str,
        al,
        dl,
        cfg,
        oracle_tag: str = "oracle",
        snapshot_impl: str = "native",
    ):
        self.object_id = object_id
        self.al = al
        self.dl = dl
        self.cfg = cfg
        self.oracle_tag = oracle_tag
        # advertised transfers, one slot per process: public commitments only
        self.ads = make_snapshot(
            runtime, f"{object_id}.ads", cfg.n, impl=snapshot_impl, initial=None, owner=object_id
        )

    def op_transfer(self, ctx, t_o: TokenMaterial, pk_r: str, sk_s: str, seed: str):
        tx = pour(t_o, pk_r, sk_s, seed, self.oracle_tag)
        if not verify_tx(tx):
            return False
        al_listed = yield from self.al.op_listed(ctx)
        if t_o.token_id not in al_listed:
            return False
        dl_listed = yield from self.dl.op_listed(ctx)
        if tx.spend_tag in dl_listed:
            return False
        yield from self.ads.op_update(ctx, advertised(tx))
        yield from self.al.op_prove(ctx, t_o.token_id)
        yield from self.dl.op_prove(ctx, tx.spend_tag)
        yield from self.dl.op_append(ctx, tx.spend_tag)
        while True:
            ret = yield from self.dl.op_prove(ctx, tx.spend_tag)
            if ret is False:
                break
        records = yield from self.dl.op_read(ctx)
        tagc = crypto.commit(tx.spend_tag, self.dl.object_id)
        cands = [r for r in records if r.label[2] == tagc]
        if choose_leader(cands, tx.new_token.token_id) == ctx.pid:
            yield from self.al.op_append(ctx, tx.new_token.token_id)
            ctx.mark(
                {
                    "object": self.object_id,
                    "lin": "transfer-append",
                    "token": tx.new_token.token_id,
                    "parent": t_o.token_id,
                    "prover": ctx.pid,
                }
            )
            return tx.new_token
        return False

    def op_spend_evidence(self, ctx, t_o: TokenMaterial):
        """Public post-race evidence for a token: spend proofs plus advertised transfers.

        Once any spend proof for the token has gone invalid, the candidate
        set is fixed (anti-flickering), so every caller derives the same
        leader from it.
        """
        records = yield from self.dl.op_read(ctx)
        tagc = crypto.commit(spend_tag_of(t_o, self.oracle_tag), self.dl.object_id)
        ads = yield from self.ads.op_snapshot(ctx)
        return {"candidates": [r for r in records if r.label[2] == tagc], "ads": list(ads)}
