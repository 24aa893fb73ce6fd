"""Deterministic stand-ins for the cryptographic primitives.

Everything here is a verification-oracle style mock: commitments are plain
hashes, set (non-)membership proofs either carry the witness explicitly or
carry only commitment/digest material plus a recomputable tag, and the blind
signature is a keyed MAC over a hash-blinded nonce.  None of it resists a
real adversary; the point is to preserve call-order semantics, determinism
(bit-exact across runs) and the "observer cannot read the proven value"
shape that the anonymous modes rely on.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable

EXPLICIT = "explicit"
MOCK_ZK = "mock-zk"

MEMBERSHIP = "membership"
NON_MEMBERSHIP = "non-membership"


class StatementFalse(Exception):
    """Raised when asked to prove a statement that does not hold."""


def _h(*parts: str) -> str:
    m = hashlib.sha256()
    for p in parts:
        b = p.encode("utf-8")
        m.update(len(b).to_bytes(8, "big"))
        m.update(b)
    return m.hexdigest()


def commit(value: str, tag: str) -> str:
    """Deterministic binding commitment to ``value``, domain-separated by ``tag``.

    Deliberately unsalted: two parties committing to the same value under the
    same tag obtain the same digest, which is what the commitment-keyed
    helping mechanism needs.
    """
    return _h("commit", tag, value)


def set_digest(values: Iterable[str]) -> str:
    return _h("set", *sorted(values))


@dataclass(frozen=True)
class ProofBlob:
    """A set-(non-)membership proof in one of two modes.

    explicit:  body = (value, sorted tuple of the set)
    mock-zk:   body = (commitment(value), digest(set), tag); the raw value
               never appears in any field.
    """

    mode: str
    statement: str
    body: tuple
    tag: str
    seal: str

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "statement": self.statement,
            "body": list(self.body) if self.mode == MOCK_ZK else [self.body[0], list(self.body[1])],
            "tag": self.tag,
            "seal": self.seal,
        }


def _seal(mode: str, statement: str, body: tuple, tag: str) -> str:
    flat = [p if isinstance(p, str) else "|".join(p) for p in body]
    return _h("seal", mode, statement, tag, *flat)


def _build(value: str, set_a: frozenset[str] | set[str], statement: str, mode: str, tag: str) -> ProofBlob:
    holds = value in set_a if statement == MEMBERSHIP else value not in set_a
    if not holds:
        raise StatementFalse(f"{statement} does not hold for the given value/set")
    if mode == EXPLICIT:
        body = (value, tuple(sorted(set_a)))
    elif mode == MOCK_ZK:
        body = (commit(value, tag), set_digest(set_a), tag)
    else:
        raise ValueError(f"unknown proof mode {mode!r}")
    return ProofBlob(mode, statement, body, tag, _seal(mode, statement, body, tag))


def prove_membership(value: str, set_a, mode: str = EXPLICIT, tag: str = "") -> ProofBlob:
    return _build(value, set_a, MEMBERSHIP, mode, tag)


def prove_nonmembership(value: str, set_a, mode: str = EXPLICIT, tag: str = "") -> ProofBlob:
    return _build(value, set_a, NON_MEMBERSHIP, mode, tag)


def verify(blob: ProofBlob, set_a) -> bool:
    """Check that ``blob`` is a sound proof of its statement about ``set_a``.

    Explicit blobs are re-checked directly.  Mock-zk blobs verify that the
    blob was produced by the proving oracle for a set with this digest; the
    oracle only ever seals true statements.
    """
    if blob.seal != _seal(blob.mode, blob.statement, blob.body, blob.tag):
        return False
    if blob.mode == EXPLICIT:
        value, listed = blob.body
        if frozenset(listed) != frozenset(set_a):
            return False
        return value in listed if blob.statement == MEMBERSHIP else value not in listed
    if blob.mode == MOCK_ZK:
        _, digest, tag = blob.body
        return digest == set_digest(set_a) and tag == blob.tag
    return False


def blob_commitment(blob: ProofBlob) -> str:
    """The commitment to the proven value (mock-zk: stored; explicit: derived)."""
    if blob.mode == MOCK_ZK:
        return blob.body[0]
    return commit(blob.body[0], blob.tag)


# --- blind signature stub -------------------------------------------------
#
# (Setup, Commit, Sign, Uncommit, Verify).  Commit hash-blinds the message
# with a nonce, Sign MACs the blinded commitment, Uncommit reveals the
# blinding nonce, Verify recomputes.  The verification key equals the
# signing key (a symmetric stand-in); keeping them distinct would buy
# nothing in a mock.


@dataclass(frozen=True)
class BlindSignature:
    mac: str
    blinding: str

    def to_json(self) -> dict:
        return {"mac": self.mac, "blinding": self.blinding}


@dataclass
class BlindSignatureScheme:
    secret: str
    public: str
    call_log: list = field(default_factory=list)

    def commit(self, message: str, blinding: str) -> str:
        c = _h("blind", blinding, message)
        self.call_log.append(("commit", c))
        return c

    def sign(self, blinded: str) -> str:
        # the issuer only ever sees the blinded commitment
        self.call_log.append(("sign", blinded))
        return _h("mac", self.secret, blinded)

    def uncommit(self, mac: str, blinding: str) -> BlindSignature:
        self.call_log.append(("uncommit", mac))
        return BlindSignature(mac=mac, blinding=blinding)


def blind_setup(seed: str) -> BlindSignatureScheme:
    key = _h("blindsig-key", seed)
    return BlindSignatureScheme(secret=key, public=key)


def blind_sign_roundtrip(message: str, scheme: BlindSignatureScheme, blinding: str) -> BlindSignature:
    """Full Commit -> Sign -> Uncommit round; the issuer never sees ``message``."""
    blinded = scheme.commit(message, blinding)
    mac = scheme.sign(blinded)
    return scheme.uncommit(mac, blinding)


def blind_verify(sig: BlindSignature, message: str, public: str) -> bool:
    blinded = _h("blind", sig.blinding, message)
    return sig.mac == _h("mac", public, blinded)
