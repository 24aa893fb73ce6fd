"""Scenario configs: what to build, who runs what, and which checks apply.

A scenario is plain data (YAML on disk, a dict over the wire).  ``build``
turns one into a fresh runtime + programs bundle; every run must rebuild so
that replaying a seed reproduces the history exactly.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import crypto, model
from .allowlist import AllowListObject
from .apps.evote import EVoteObject, make_ballot
from .apps.transfer import AnonAssetTransfer, mint_token
from .denylist import DenyListObject
from .reductions import AnonTransferConsensus, DenyListConsensus, EVoteConsensus, SENTINEL
from .sim import ProgramSpec, Runtime
from .snapshot import make_snapshot


class ConfigError(Exception):
    pass


@dataclass
class Scenario:
    name: str
    object: dict
    system: dict
    processes: list[dict]
    checks: list[dict]
    schedule: dict = field(default_factory=dict)
    step_budget: int = 10_000

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "object": self.object,
            "system": self.system,
            "processes": self.processes,
            "checks": self.checks,
            "schedule": self.schedule,
            "step_budget": self.step_budget,
        }


def _need(data: dict, key: str, typ, where: str):
    if key not in data:
        raise ConfigError(f"missing field '{where}.{key}'")
    if typ is not None and not isinstance(data[key], typ):
        raise ConfigError(f"field '{where}.{key}' must be {typ.__name__}, got {type(data[key]).__name__}")
    return data[key]


def parse_scenario(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping")
    name = _need(data, "name", str, "scenario")
    obj = _need(data, "object", dict, "scenario")
    _need(obj, "kind", str, "object")
    if obj["kind"] not in _BUILDERS:
        raise ConfigError(f"field 'object.kind' has unknown kind {obj['kind']!r}")
    system = _need(data, "system", dict, "scenario")
    n = _need(system, "n", int, "system")
    managers = _need(system, "managers", list, "system")
    verifiers = _need(system, "verifiers", list, "system")
    for label, pids in (("managers", managers), ("verifiers", verifiers)):
        if not all(isinstance(p, int) and 1 <= p <= n for p in pids):
            raise ConfigError(f"field 'system.{label}' must list process ids in 1..{n}")
    processes = _need(data, "processes", list, "scenario")
    seen_pids = set()
    for i, p in enumerate(processes):
        pid = _need(p, "pid", int, f"processes[{i}]")
        if pid in seen_pids or not 1 <= pid <= n:
            raise ConfigError(f"field 'processes[{i}].pid' invalid or duplicate: {pid}")
        seen_pids.add(pid)
        prog = _need(p, "program", str, f"processes[{i}]")
        if prog not in _PROGRAMS:
            raise ConfigError(f"field 'processes[{i}].program' has unknown program {prog!r}")
    checks = data.get("checks", [])
    norm_checks = []
    for i, c in enumerate(checks):
        if isinstance(c, str):
            c = {"type": c}
        if not isinstance(c, dict) or "type" not in c:
            raise ConfigError(f"field 'checks[{i}]' must be a name or a mapping with 'type'")
        norm_checks.append(c)
    schedule = data.get("schedule", {})
    if not isinstance(schedule, dict):
        raise ConfigError("field 'schedule' must be a mapping")
    budget = data.get("step_budget", 10_000)
    if not isinstance(budget, int) or budget <= 0:
        raise ConfigError("field 'step_budget' must be a positive integer")
    return Scenario(
        name=name,
        object=obj,
        system=system,
        processes=processes,
        checks=norm_checks,
        schedule=schedule,
        step_budget=budget,
    )


@dataclass
class Bundle:
    """Everything one run needs, built fresh each time."""

    runtime: Runtime
    programs: list[ProgramSpec]
    main: object
    object_id: str
    kind: Optional[model.Kind]
    cfg: model.SystemConfig
    proof_mode: str
    extras: dict = field(default_factory=dict)


def _system_config(scn: Scenario) -> model.SystemConfig:
    sysd = scn.system
    uni = sysd.get("universe") or {}
    universe = model.Universe(
        tag=uni.get("tag", "any"),
        values=frozenset(uni["values"]) if uni.get("values") else None,
    )
    return model.SystemConfig(
        n=sysd["n"],
        managers=frozenset(sysd["managers"]),
        verifiers=frozenset(sysd["verifiers"]),
        universe=universe,
    )


# --- object builders --------------------------------------------------------


def _build_allowlist(scn, cfg, rt, opts):
    al = AllowListObject(
        rt,
        "al",
        cfg,
        proof_mode=opts.get("crypto_mode", crypto.EXPLICIT),
        snapshot_impl=opts.get("snapshot_impl", "native"),
    )
    return Bundle(rt, [], al, "al", model.Kind.ALLOWLIST, cfg, al.proof_mode)


def _build_denylist(scn, cfg, rt, opts):
    dl = DenyListObject(
        rt,
        "dl",
        cfg,
        proof_mode=opts.get("crypto_mode", crypto.EXPLICIT),
        snapshot_impl=opts.get("snapshot_impl", "native"),
        use_consensus=opts.get("use_consensus", True),
    )
    return Bundle(rt, [], dl, "dl", model.Kind.DENYLIST, cfg, dl.proof_mode)


def _build_snapshot(scn, cfg, rt, opts):
    snap = make_snapshot(
        rt, "arr", cfg.n, impl=opts.get("snapshot_impl", "registers"), initial=None, trace_writes=True
    )
    snap.object_id = "arr"
    return Bundle(rt, [], snap, "arr", None, cfg, crypto.EXPLICIT)


def _build_denylist_consensus(scn, cfg, rt, opts):
    dl = DenyListObject(rt, "dl", cfg, snapshot_impl=opts.get("snapshot_impl", "native"))
    board = make_snapshot(rt, "proposals", cfg.n, initial=None, owner="cons")
    cons = DenyListConsensus(rt, "cons", cfg, dl, board)
    return Bundle(rt, [], cons, "cons", None, cfg, crypto.EXPLICIT, extras={"dl": dl})


def _build_anon_at(scn, cfg, rt, opts):
    oracle = opts.get("oracle", "oracle")
    mode = opts.get("crypto_mode", crypto.MOCK_ZK)
    tokens = {label: mint_token(label, oracle) for label in opts.get("initial_tokens", ["t0"])}
    al = AllowListObject(
        rt, "al", cfg, proof_mode=mode, initial_listed=frozenset(t.token_id for t in tokens.values())
    )
    dl = DenyListObject(rt, "dl", cfg, proof_mode=mode)
    at = AnonAssetTransfer(rt, "at", al, dl, cfg, oracle_tag=oracle)
    return Bundle(
        rt,
        [],
        at,
        "at",
        None,
        cfg,
        mode,
        extras={
            "al": al,
            "dl": dl,
            "tokens": tokens,
            "initial_token_ids": {t.token_id for t in tokens.values()},
            "sink": opts.get("sink", "sink-wallet"),
        },
    )


def _build_anon_at_consensus(scn, cfg, rt, opts):
    bundle = _build_anon_at(scn, cfg, rt, opts)
    shared = bundle.extras["tokens"][opts.get("shared_token", "t0")]
    seed_board = make_snapshot(rt, "seed-board", cfg.n, initial=None, owner="cons")
    value_board = make_snapshot(rt, "value-board", cfg.n, initial=None, owner="cons")
    seeds = {pid: f"seed-{pid}" for pid in cfg.pids}
    cons = AnonTransferConsensus(
        rt, "cons", cfg, bundle.main, shared, bundle.extras["sink"], seeds, seed_board, value_board
    )
    bundle.extras["at"] = bundle.main
    return Bundle(rt, [], cons, "cons", None, cfg, bundle.proof_mode, extras=bundle.extras)


def _build_evote(scn, cfg, rt, opts):
    scheme = crypto.blind_setup(opts.get("issuer_seed", "issuer"))
    dl = DenyListObject(rt, "dl", cfg, proof_mode=opts.get("crypto_mode", crypto.EXPLICIT))
    ev = EVoteObject(
        rt, "ev", dl, cfg, scheme.public, conflict_rule=opts.get("conflict_rule", "reject")
    )
    ballots = {}
    for label, b in (opts.get("ballots") or {}).items():
        if b.get("forged"):
            rogue = crypto.blind_setup(opts.get("issuer_seed", "issuer") + "-rogue")
            ballots[label] = make_ballot(rogue, b["nonce"], b.get("blinding", "r"), b["choice"])
        else:
            ballots[label] = make_ballot(scheme, b["nonce"], b.get("blinding", "r"), b["choice"])
    return Bundle(
        rt,
        [],
        ev,
        "ev",
        None,
        cfg,
        ev.dl.proof_mode,
        extras={"dl": dl, "scheme": scheme, "ballots": ballots},
    )


def _build_evote_consensus(scn, cfg, rt, opts):
    opts = dict(opts)
    opts.setdefault("conflict_rule", "choose-min")
    bundle = _build_evote(scn, cfg, rt, opts)
    scheme = bundle.extras["scheme"]
    sig = crypto.blind_sign_roundtrip(SENTINEL, scheme, "shared-blinding")
    cons = EVoteConsensus(rt, "cons", bundle.main, sig, SENTINEL)
    bundle.extras["ev"] = bundle.main
    return Bundle(rt, [], cons, "cons", None, cfg, bundle.proof_mode, extras=bundle.extras)


_BUILDERS: dict[str, Callable] = {
    "allowlist": _build_allowlist,
    "denylist": _build_denylist,
    "snapshot": _build_snapshot,
    "denylist-consensus": _build_denylist_consensus,
    "anon-at": _build_anon_at,
    "anon-at-consensus": _build_anon_at_consensus,
    "evote": _build_evote,
    "evote-consensus": _build_evote_consensus,
}


# --- programs ---------------------------------------------------------------


def _prog_ops(bundle: Bundle, args: dict):
    ops = args.get("ops", [])

    def make(ctx):
        for op in ops:
            name, *rest = op
            yield from ctx.call(bundle.main, name, *rest)

    return make


def _prog_random_ops(bundle: Bundle, args: dict):
    count = args.get("count", 2)
    values = args.get("values", ["x", "y"])
    names = args.get("ops", ["append", "prove", "read"])

    def make(ctx):
        rng = random.Random(ctx.local_seed)
        for _ in range(count):
            name = rng.choice(names)
            if name == "read":
                yield from ctx.call(bundle.main, "read")
            else:
                yield from ctx.call(bundle.main, name, rng.choice(values))

    return make


def _prog_propose(bundle: Bundle, args: dict):
    def make(ctx):
        value = args.get("value", f"v{ctx.pid}")
        yield from ctx.call(bundle.main, "propose", value)

    return make


def _prog_transfer(bundle: Bundle, args: dict):
    def make(ctx):
        tok = bundle.extras["tokens"][args.get("token", "t0")]
        seed = args.get("seed", f"seed-{ctx.pid}")
        recipient = args.get("recipient", bundle.extras.get("sink", "sink-wallet"))
        yield from ctx.call(bundle.main, "transfer", tok, recipient, tok.secret, seed)

    return make


def _prog_vote(bundle: Bundle, args: dict):
    def make(ctx):
        ballot = bundle.extras["ballots"][args["ballot"]]
        yield from ctx.call(bundle.main, "vote", ballot)

    return make


def _prog_vote_count(bundle: Bundle, args: dict):
    def make(ctx):
        yield from ctx.call(bundle.main, "vote_count")

    return make


_PROGRAMS: dict[str, Callable] = {
    "ops": _prog_ops,
    "random-ops": _prog_random_ops,
    "propose": _prog_propose,
    "transfer": _prog_transfer,
    "vote": _prog_vote,
    "vote-count": _prog_vote_count,
}


def build(scn: Scenario) -> Bundle:
    """Fresh runtime + programs for one run of the scenario."""
    cfg = _system_config(scn)
    rt = Runtime(consensus_k=max(1, len(cfg.verifiers)))
    opts = scn.object.get("options", {}) or {}
    bundle = _BUILDERS[scn.object["kind"]](scn, cfg, rt, opts)
    for p in scn.processes:
        maker = _PROGRAMS[p["program"]](bundle, p.get("args", {}) or {})
        bundle.programs.append(
            ProgramSpec(pid=p["pid"], make=maker, start_after=tuple(p.get("start_after", ())))
        )
    return bundle
