"""Sequential reference semantics: transition rows, invariants, and the
2-op enumeration oracle for the deny-list validity clause."""
import itertools
import random

import pytest

from listlab import crypto, model
from listlab.model import Kind, SeqState, SystemConfig, Universe, apply_op, replay_op

CFG = SystemConfig(n=3, managers=frozenset({1}), verifiers=frozenset({2, 3}))


def test_config_validation():
    with pytest.raises(ValueError):
        SystemConfig(n=2, managers=frozenset(), verifiers=frozenset({1}))
    with pytest.raises(ValueError):
        SystemConfig(n=2, managers=frozenset({5}), verifiers=frozenset({1}))


def test_universe_membership():
    u = Universe(tag="small", values=frozenset({"a", "b"}))
    assert u.contains("a") and not u.contains("z")
    assert Universe().contains("anything")


def test_append_by_manager():
    s1, resp = apply_op(SeqState(), 1, ("append", "x"), CFG, Kind.ALLOWLIST)
    assert resp is True and s1.listed_values == {"x"}


def test_append_by_non_manager_returns_false_unchanged():
    s1, resp = apply_op(SeqState(), 2, ("append", "x"), CFG, Kind.ALLOWLIST)
    assert resp is False and s1 == SeqState()


def test_append_outside_universe_returns_false():
    cfg = SystemConfig(n=3, managers=frozenset({1}), verifiers=frozenset({2}),
                       universe=Universe(values=frozenset({"ok"})))
    _, resp = apply_op(SeqState(), 1, ("append", "nope"), cfg, Kind.ALLOWLIST)
    assert resp is False


def test_prove_on_empty_allowlist_is_false():
    _, resp = apply_op(SeqState(), 2, ("prove", "x"), CFG, Kind.ALLOWLIST)
    assert resp is False


def test_prove_appends_record_with_prover_identity():
    s1, _ = apply_op(SeqState(), 1, ("append", "x"), CFG, Kind.ALLOWLIST)
    s2, resp = apply_op(s1, 2, ("prove", "x"), CFG, Kind.ALLOWLIST)
    applied, blob = resp
    assert applied == ["x"] and crypto.verify(blob, {"x"})
    assert [r.prover for r in s2.proofs] == [2]


def test_read_returns_proofs_unchanged():
    s1, _ = apply_op(SeqState(), 1, ("append", "x"), CFG, Kind.ALLOWLIST)
    s2, _ = apply_op(s1, 2, ("prove", "x"), CFG, Kind.ALLOWLIST)
    s3, resp = apply_op(s2, 3, ("read",), CFG, Kind.ALLOWLIST)
    assert s3 == s2 and resp == s2.proofs


def test_read_allowed_for_any_process():
    # even a process that is neither manager nor verifier
    cfg = SystemConfig(n=3, managers=frozenset({1}), verifiers=frozenset({2}))
    _, resp = apply_op(SeqState(), 3, ("read",), cfg, Kind.ALLOWLIST)
    assert resp == ()


def test_denylist_append_then_prove_false():
    s1, _ = apply_op(SeqState(), 1, ("append", "x"), CFG, Kind.DENYLIST)
    s2, resp = apply_op(s1, 2, ("prove", "x"), CFG, Kind.DENYLIST)
    assert resp is False


def test_denylist_prove_on_fresh_object_valid():
    _, resp = apply_op(SeqState(), 2, ("prove", "x"), CFG, Kind.DENYLIST)
    applied, blob = resp
    assert applied == [] and crypto.verify(blob, frozenset())


def _prove_validity_oracle(history, caller, cfg, kind):
    """Direct transcription of the validity clauses for the last op's PROVE.

    history: list of (caller, op, was_valid) before this op.
    """
    listed = set()
    denied = set()
    for c, op, valid in history:
        if op[0] == "append" and valid:
            listed.add(op[1])
        if op[0] == "prove" and not valid and c in cfg.verifiers and op[1] in listed:
            denied.add(op[1])
    v = "x"
    if caller not in cfg.verifiers:
        return False
    if kind == Kind.ALLOWLIST:
        return v in listed
    return v not in listed and v not in denied


def test_two_op_enumeration_matches_validity_clause():
    # all 2-op sequences on a 1-value universe, every caller combination
    cfg = SystemConfig(n=2, managers=frozenset({1}), verifiers=frozenset({1, 2}),
                       universe=Universe(values=frozenset({"x"})))
    ops = [("append", "x"), ("prove", "x"), ("read",)]
    for kind in (Kind.ALLOWLIST, Kind.DENYLIST):
        for (c1, op1), (c2, op2) in itertools.product(itertools.product([1, 2], ops), repeat=2):
            state = SeqState()
            state, r1 = apply_op(state, c1, op1, cfg, kind)
            valid1 = r1 is not False and op1[0] != "read"
            state, r2 = apply_op(state, c2, op2, cfg, kind)
            if op2[0] == "prove":
                expect = _prove_validity_oracle([(c1, op1, valid1)], c2, cfg, kind)
                assert (r2 is not False) == expect, (kind, c1, op1, c2, op2)


def test_apply_is_deterministic():
    s1a, r1a = apply_op(SeqState(), 1, ("append", "x"), CFG, Kind.DENYLIST)
    s1b, r1b = apply_op(SeqState(), 1, ("append", "x"), CFG, Kind.DENYLIST)
    assert s1a == s1b and r1a == r1b


def test_append_only_invariant_over_random_sequences():
    rng = random.Random(11)
    for kind in (Kind.ALLOWLIST, Kind.DENYLIST):
        state = SeqState()
        for _ in range(200):
            caller = rng.randint(1, 3)
            op = rng.choice([("append", rng.choice("ab")), ("prove", rng.choice("ab")), ("read",)])
            nxt, _ = apply_op(state, caller, op, CFG, kind)
            assert state.listed_values <= nxt.listed_values
            assert nxt.proofs[: len(state.proofs)] == state.proofs
            state = nxt


def test_sequential_anti_flickering_and_progress():
    # once a verifier PROVE(x) fails on a deny-list, every later one fails;
    # after a successful append, allow-list proves succeed and deny-list fail
    rng = random.Random(13)
    for _ in range(50):
        state_d = SeqState()
        state_a = SeqState()
        appended = False
        denied_seen = False
        for _ in range(40):
            caller = rng.randint(1, 3)
            op = rng.choice([("append", "x"), ("prove", "x"), ("read",)])
            state_d, rd = apply_op(state_d, caller, op, CFG, Kind.DENYLIST)
            state_a, ra = apply_op(state_a, caller, op, CFG, Kind.ALLOWLIST)
            if op[0] == "append" and rd is True:
                appended = True
            if op[0] == "prove" and caller in CFG.verifiers:
                if denied_seen:
                    assert rd is False
                if rd is False and "x" in state_d.listed_values:
                    denied_seen = True
                if appended:
                    assert rd is False
                    assert ra is not False


def test_language_check_examples():
    assert model.language_holds(Kind.ALLOWLIST, "x", {"x", "y"})
    assert not model.language_holds(Kind.DENYLIST, "x", {"x"})
    assert model.language_holds(Kind.DENYLIST, "z", set())


def test_anti_flicker_predicate_examples():
    assert model.flicker_free("v", [])
    assert not model.flicker_free("v", [{"v"}])
    assert model.flicker_free("v", [{"a"}, {"b"}])


# --- replay judging ----------------------------------------------------------


def _blob_json(maker, v, s, tag="dl"):
    return maker(v, s, tag=tag).to_json()


def test_replay_accepts_stale_applied_set_on_denylist():
    s1 = replay_op(SeqState(), 1, ("append", "x"), True, CFG, Kind.DENYLIST, tag="dl")
    resp = [[], _blob_json(crypto.prove_nonmembership, "x", frozenset())]
    s2 = replay_op(s1, 2, ("prove", "x"), resp, CFG, Kind.DENYLIST, tag="dl")
    assert s2 is not None and len(s2.proofs) == 1


def test_replay_rejects_valid_after_denial():
    s1 = replay_op(SeqState(), 1, ("append", "x"), True, CFG, Kind.DENYLIST, tag="dl")
    s2 = replay_op(s1, 2, ("prove", "x"), False, CFG, Kind.DENYLIST, tag="dl")
    assert s2 is not None and "x" in s2.denied
    resp = [[], _blob_json(crypto.prove_nonmembership, "x", frozenset())]
    assert replay_op(s2, 3, ("prove", "x"), resp, CFG, Kind.DENYLIST, tag="dl") is None


def test_replay_rejects_false_prove_on_fresh_denylist():
    assert replay_op(SeqState(), 2, ("prove", "x"), False, CFG, Kind.DENYLIST, tag="dl") is None


def test_replay_allowlist_false_illegal_once_listed():
    s1 = replay_op(SeqState(), 1, ("append", "x"), True, CFG, Kind.ALLOWLIST, tag="al")
    assert replay_op(s1, 2, ("prove", "x"), False, CFG, Kind.ALLOWLIST, tag="al") is None


def test_replay_rejects_wrong_append_response():
    assert replay_op(SeqState(), 2, ("append", "x"), True, CFG, Kind.ALLOWLIST) is None
    assert replay_op(SeqState(), 1, ("append", "x"), False, CFG, Kind.ALLOWLIST) is None


def test_replay_rejects_applied_set_outside_listed():
    resp = [["ghost"], _blob_json(crypto.prove_membership, "ghost", {"ghost"}, tag="al")]
    assert replay_op(SeqState(), 2, ("prove", "ghost"), resp, CFG, Kind.ALLOWLIST, tag="al") is None


def test_replay_read_compares_up_to_permutation():
    s = SeqState()
    s = replay_op(s, 1, ("append", "x"), True, CFG, Kind.ALLOWLIST, tag="al")
    r1 = [["x"], _blob_json(crypto.prove_membership, "x", {"x"}, tag="al")]
    s = replay_op(s, 2, ("prove", "x"), r1, CFG, Kind.ALLOWLIST, tag="al")
    s = replay_op(s, 3, ("prove", "x"), r1, CFG, Kind.ALLOWLIST, tag="al")
    recs = [r.to_json() for r in s.proofs]
    assert replay_op(s, 1, ("read",), recs, CFG, Kind.ALLOWLIST, tag="al") is not None
    assert replay_op(s, 1, ("read",), list(reversed(recs)), CFG, Kind.ALLOWLIST, tag="al") is not None
    assert replay_op(s, 1, ("read",), recs[:1], CFG, Kind.ALLOWLIST, tag="al") is None
