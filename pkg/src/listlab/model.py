"""Domain model and the sequential reference semantics.

An allow-list and a deny-list are the two instantiations of one generic
proof-list object: state is an append-only set of listed values plus an
append-only sequence of proof records.  APPEND grows the listed values,
PROVE appends a record certifying a (non-)membership statement about some
subset of the listed values, READ returns the records.

``apply_op`` is the generating form (it picks the applied set itself and
produces the canonical response); ``replay_op`` is the judging form used by
the linearizability checker (it decides whether a recorded response is
legal at this point and, if so, returns the successor state).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from . import crypto

ProcessId = int


class Kind(str, Enum):
    ALLOWLIST = "allowlist"
    DENYLIST = "denylist"


@dataclass(frozen=True)
class Universe:
    """The value domain: a tag plus an optional explicit member set (None = all)."""

    tag: str = "any"
    values: Optional[frozenset[str]] = None

    def contains(self, v: str) -> bool:
        return isinstance(v, str) and (self.values is None or v in self.values)


@dataclass(frozen=True)
class SystemConfig:
    n: int
    managers: frozenset[ProcessId]
    verifiers: frozenset[ProcessId]
    universe: Universe = Universe()

    def __post_init__(self):
        pids = frozenset(range(1, self.n + 1))
        if not self.managers or not self.verifiers:
            raise ValueError("managers and verifiers must be nonempty")
        if not self.managers <= pids or not self.verifiers <= pids:
            raise ValueError("managers/verifiers must be process ids in 1..n")

    @property
    def pids(self) -> tuple[ProcessId, ...]:
        return tuple(range(1, self.n + 1))

    def slot(self, pid: ProcessId) -> int:
        if not 1 <= pid <= self.n:
            raise ValueError(f"unknown process id {pid}")
        return pid - 1


@dataclass(frozen=True)
class ProofRecord:
    prover: ProcessId
    applied_set: frozenset[str]
    proof: crypto.ProofBlob
    label: tuple = ()

    def to_json(self) -> dict:
        return {
            "prover": self.prover,
            "applied_set": sorted(self.applied_set),
            "proof": self.proof.to_json(),
            "label": list(self.label),
        }


def record_key(rec_json: dict) -> tuple:
    """Canonical identity of a record for READ comparison.

    Construction-side labels (queue timestamps, board slots) are not part of
    the sequential object's state, so they are excluded here.
    """
    return (
        rec_json["prover"],
        tuple(rec_json["applied_set"]),
        rec_json["proof"]["seal"],
    )


@dataclass(frozen=True)
class SeqState:
    listed_values: frozenset[str] = frozenset()
    proofs: tuple[ProofRecord, ...] = ()
    # values for which some verifier PROVE already failed against the listed
    # values: anti-flickering forbids any later valid PROVE of these
    denied: frozenset[str] = frozenset()

    def key(self) -> tuple:
        return (
            tuple(sorted(self.listed_values)),
            tuple((r.prover, tuple(sorted(r.applied_set)), r.proof.seal) for r in self.proofs),
            tuple(sorted(self.denied)),
        )


def language_holds(kind: Kind, v: str, set_a) -> bool:
    """Membership for an allow-list, non-membership for a deny-list."""
    return (v in set_a) if kind == Kind.ALLOWLIST else (v not in set_a)


def flicker_free(v: str, sets_seen) -> bool:
    """True iff no previously applied set contains ``v``.

    This is the extra validity clause a deny-list PROVE must satisfy; an
    allow-list imposes no such constraint (always true).
    """
    return all(v not in prior for prior in sets_seen)


def prove_valid_here(kind: Kind, state: SeqState, caller: ProcessId, v: str, cfg: SystemConfig) -> bool:
    """Whether a PROVE(v) generated at ``state`` comes out valid.

    The generating semantics applies the proof to the full listed values;
    membership can only appear and non-membership can only disappear, so
    this is the eventual validity of v at this point.
    """
    if caller not in cfg.verifiers:
        return False
    if kind == Kind.DENYLIST and v in state.denied:
        return False
    return language_holds(kind, v, state.listed_values)


def apply_op(
    state: SeqState,
    caller: ProcessId,
    op: tuple,
    cfg: SystemConfig,
    kind: Kind,
    proof_mode: str = crypto.EXPLICIT,
    tag: str = "",
):
    """Pure transition: (state, caller, op) -> (state', response).

    Invalid operations respond False and leave the state unchanged; there
    are no error outcomes.
    """
    name = op[0]
    if name == "append":
        v = op[1]
        if caller in cfg.managers and cfg.universe.contains(v):
            return replace(state, listed_values=state.listed_values | {v}), True
        return state, False
    if name == "prove":
        v = op[1]
        if not prove_valid_here(kind, state, caller, v, cfg):
            return _poison(state, kind, caller, v, cfg), False
        applied = state.listed_values
        maker = crypto.prove_membership if kind == Kind.ALLOWLIST else crypto.prove_nonmembership
        blob = maker(v, applied, mode=proof_mode, tag=tag)
        rec = ProofRecord(prover=caller, applied_set=applied, proof=blob, label=(len(state.proofs),))
        return replace(state, proofs=state.proofs + (rec,)), (sorted(applied), blob)
    if name == "read":
        return state, tuple(state.proofs)
    raise ValueError(f"unknown operation {name!r}")


def _poison(state: SeqState, kind: Kind, caller: ProcessId, v: str, cfg: SystemConfig) -> SeqState:
    # a verifier's PROVE failing against the listed values is a real denial;
    # from here on no PROVE of v may ever be valid again
    if kind == Kind.DENYLIST and caller in cfg.verifiers and v in state.listed_values:
        return replace(state, denied=state.denied | {v})
    return state


def replay_op(
    state: SeqState,
    caller: ProcessId,
    op: tuple,
    response,
    cfg: SystemConfig,
    kind: Kind,
    tag: str = "",
) -> Optional[SeqState]:
    """Judge a recorded (op, response) pair against the sequential object.

    Returns the successor state when the pair is legal at this point, else
    None.  Responses arrive in their wire (JSON) form.

    A valid PROVE response carries the applied set the implementation
    actually used; that set may lag the current listed values (it was fixed
    earlier, e.g. by an agreement round that predates a concurrent append),
    so it only has to be a subset of the listed values that satisfies the
    statement.  Anti-flickering is enforced through the ``denied`` marks: a
    verifier's False against a listed value poisons that value for good.
    The allow-list side is strict in both directions, since its proofs are
    always applied to a fresh snapshot: False is only legal while the value
    is unlisted.
    """
    name = op[0]
    if name == "append":
        expect = caller in cfg.managers and cfg.universe.contains(op[1])
        if response is not expect:
            return None
        if expect:
            return replace(state, listed_values=state.listed_values | {op[1]})
        return state
    if name == "prove":
        v = op[1]
        if response is False:
            if kind == Kind.ALLOWLIST:
                return state if not prove_valid_here(kind, state, caller, v, cfg) else None
            if caller not in cfg.verifiers:
                return state
            if v in state.listed_values or v in state.denied:
                return _poison(state, kind, caller, v, cfg)
            return None
        if caller not in cfg.verifiers:
            return None
        if kind == Kind.DENYLIST and v in state.denied:
            return None
        if kind == Kind.ALLOWLIST and v not in state.listed_values:
            return None
        applied, blob = _decode_prove_response(response)
        if blob is None:
            return None
        if not applied <= state.listed_values:
            return None
        if not language_holds(kind, v, applied):
            return None
        if not crypto.verify(blob, applied):
            return None
        if crypto.blob_commitment(blob) != crypto.commit(v, blob.tag):
            return None
        rec = ProofRecord(prover=caller, applied_set=applied, proof=blob, label=(len(state.proofs),))
        return replace(state, proofs=state.proofs + (rec,))
    if name == "read":
        got = _read_keys(response)
        if got is None:
            return None
        want = sorted(record_key(r.to_json()) for r in state.proofs)
        return state if got == want else None
    raise ValueError(f"unknown operation {name!r}")


def _decode_prove_response(response):
    try:
        applied_list, blob_json = response
        blob = crypto.ProofBlob(
            mode=blob_json["mode"],
            statement=blob_json["statement"],
            body=(
                tuple(blob_json["body"])
                if blob_json["mode"] == crypto.MOCK_ZK
                else (blob_json["body"][0], tuple(blob_json["body"][1]))
            ),
            tag=blob_json["tag"],
            seal=blob_json["seal"],
        )
        return frozenset(applied_list), blob
    except (TypeError, ValueError, KeyError, IndexError):
        return None, None


def _read_keys(response):
    # READ responses are order-free: compare as sorted multisets of record keys
    if not isinstance(response, (list, tuple)):
        return None
    try:
        return sorted(record_key(r) for r in response)
    except (TypeError, KeyError):
        return None
