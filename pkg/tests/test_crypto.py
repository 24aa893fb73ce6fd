import random

import pytest

from listlab import crypto


def test_commit_deterministic():
    assert crypto.commit("v", "t") == crypto.commit("v", "t")


def test_commit_distinct_values_no_collisions():
    # 10^4 random pairs, zero collisions expected
    rng = random.Random(7)
    seen = {}
    for _ in range(10_000):
        v = f"v{rng.randrange(10**9)}"
        d = crypto.commit(v, "t")
        assert seen.setdefault(d, v) == v
    assert len(seen) > 9_000  # distinct inputs did occur


def test_commit_domain_separation():
    assert crypto.commit("v", "t1") != crypto.commit("v", "t2")


def test_commit_no_length_extension_confusion():
    assert crypto.commit("ab", "c") != crypto.commit("a", "bc")


def test_prove_membership_roundtrip():
    blob = crypto.prove_membership("v", {"v"})
    assert crypto.verify(blob, {"v"})


def test_prove_membership_statement_false():
    with pytest.raises(crypto.StatementFalse):
        crypto.prove_membership("v", {"w"})


def test_prove_nonmembership_empty_set():
    blob = crypto.prove_nonmembership("v", set())
    assert crypto.verify(blob, set())


def test_prove_nonmembership_statement_false():
    with pytest.raises(crypto.StatementFalse):
        crypto.prove_nonmembership("v", {"v"})


def test_explicit_blob_carries_witness():
    blob = crypto.prove_nonmembership("x", {"a", "b"}, mode=crypto.EXPLICIT)
    value, listed = blob.body
    assert value == "x" and set(listed) == {"a", "b"}
    assert crypto.verify(blob, {"a", "b"})


def test_verify_rejects_different_set():
    blob = crypto.prove_membership("v", {"v", "w"})
    assert not crypto.verify(blob, {"v"})


def test_verify_rejects_tampered_seal():
    blob = crypto.prove_membership("v", {"v"})
    forged = crypto.ProofBlob(blob.mode, blob.statement, blob.body, blob.tag, "0" * 64)
    assert not crypto.verify(forged, {"v"})


def test_mock_zk_blob_hides_value():
    blob = crypto.prove_membership("secret-value", {"secret-value", "other"}, mode=crypto.MOCK_ZK, tag="obj")
    # observable fields are the commitment, the set digest and the tag
    assert blob.body == (
        crypto.commit("secret-value", "obj"),
        crypto.set_digest({"secret-value", "other"}),
        "obj",
    )
    flat = " ".join(str(p) for p in blob.body) + blob.seal
    assert "secret-value" not in flat
    assert crypto.verify(blob, {"secret-value", "other"})


def test_mock_zk_verify_needs_matching_set():
    blob = crypto.prove_nonmembership("v", {"a"}, mode=crypto.MOCK_ZK, tag="obj")
    assert crypto.verify(blob, {"a"})
    assert not crypto.verify(blob, {"a", "b"})


def test_blob_commitment_consistent_between_modes():
    e = crypto.prove_membership("v", {"v"}, mode=crypto.EXPLICIT, tag="obj")
    z = crypto.prove_membership("v", {"v"}, mode=crypto.MOCK_ZK, tag="obj")
    assert crypto.blob_commitment(e) == crypto.blob_commitment(z) == crypto.commit("v", "obj")


# --- blind signature -------------------------------------------------------


def test_blind_roundtrip_verifies():
    scheme = crypto.blind_setup("seed")
    sig = crypto.blind_sign_roundtrip("nonce-1", scheme, "blind-r")
    assert crypto.blind_verify(sig, "nonce-1", scheme.public)


def test_blind_verify_wrong_key():
    scheme = crypto.blind_setup("seed")
    other = crypto.blind_setup("other")
    sig = crypto.blind_sign_roundtrip("nonce-1", scheme, "blind-r")
    assert not crypto.blind_verify(sig, "nonce-1", other.public)


def test_blind_verify_tampered_message():
    scheme = crypto.blind_setup("seed")
    sig = crypto.blind_sign_roundtrip("nonce-1", scheme, "blind-r")
    assert not crypto.blind_verify(sig, "nonce-2", scheme.public)


def test_signer_never_sees_the_nonce():
    scheme = crypto.blind_setup("seed")
    crypto.blind_sign_roundtrip("the-raw-nonce", scheme, "blind-r")
    signed = [payload for call, payload in scheme.call_log if call == "sign"]
    assert len(signed) == 1
    assert all("the-raw-nonce" not in payload for payload in signed)
