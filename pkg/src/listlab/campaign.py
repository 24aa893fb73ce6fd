"""Campaign runner: many schedules of one scenario, checked and reported.

A campaign re-builds the scenario for every schedule (seeded range,
exhaustive enumeration, or a crash-position sweep), records the history,
applies the scenario's checks, and aggregates a report.  Any failure ships
enough to replay it exactly: the seed, and for non-seeded modes the full
decision list.
"""
from __future__ import annotations

import json
import pathlib
import random
from dataclasses import dataclass, field
from typing import Optional

from . import checker, crypto, model, scenarios
from .sim import BudgetExceeded, History, Schedule, SimulationError, build_ops, enumerate_runs, run


@dataclass
class CampaignReport:
    scenario: str
    mode: str
    runs: int = 0
    passed: int = 0
    violations: int = 0
    overruns: int = 0
    failures: list[dict] = field(default_factory=list)
    first_failure: Optional[dict] = None
    artifacts: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.overruns == 0

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "runs": self.runs,
            "passed": self.passed,
            "violations": self.violations,
            "overruns": self.overruns,
            "failures": self.failures[:20],
            "first_failure": self.first_failure,
            "artifacts": self.artifacts,
            "ok": self.ok,
        }


# --- checks ------------------------------------------------------------------


def _spec_for(bundle: scenarios.Bundle):
    if bundle.kind is not None:
        return checker.ProofListSpec(
            bundle.cfg, bundle.kind, tag=bundle.object_id, proof_mode=bundle.proof_mode
        )
    if bundle.object_id == "arr":
        return checker.ArraySpec(width=bundle.cfg.n, initial=None)
    raise scenarios.ConfigError(f"no sequential spec for object {bundle.object_id!r}")


def check_linearizability(bundle, history, params):
    ops = build_ops(history, bundle.object_id)
    verdict = checker.check(ops, _spec_for(bundle), bound=params.get("bound", 20))
    if not verdict.linearizable:
        return [f"not linearizable: {verdict.violation}"]
    return []


def check_anti_flickering(bundle, history, params):
    object_id = params.get("object", "dl")
    ok = checker.scan_anti_flickering(history, object_id, bundle.cfg.verifiers)
    return [] if ok else [f"anti-flickering violated on {object_id}"]


def check_progress(bundle, history, params):
    problems = []
    kind = bundle.kind or model.Kind(params["kind"])
    if not checker.scan_progress(history, bundle.object_id, kind, bundle.cfg.verifiers):
        problems.append("progress violated: prove outcome flipped after a completed append")
    expect = params.get("expect")
    if expect:
        want_valid = expect == "valid"
        for o in build_ops(history, bundle.object_id):
            if o.name != "prove" or o.pending:
                continue
            if (o.ret is not False) != want_valid:
                problems.append(f"prove({o.args[0]}) by {o.process} expected {expect}, got {o.ret!r}")
    return problems


def check_no_consensus(bundle, history, params):
    cells = bundle.runtime.consensus_cells_owned_by(bundle.object_id)
    accesses = [a for a in bundle.runtime.consensus_accesses if a[0].startswith(bundle.object_id)]
    problems = []
    if cells:
        problems.append(f"object allocated consensus cells: {cells}")
    if accesses:
        problems.append(f"object accessed consensus cells: {accesses[:3]}")
    return problems


def check_consensus_properties(bundle, history, params):
    problems = []
    ops = build_ops(history, bundle.object_id)
    proposed = {o.args[0] for o in ops if o.name == "propose"}
    decided = {}
    for o in ops:
        if o.name != "propose":
            continue
        if o.pending:
            if o.process not in history.crashed:
                problems.append(f"termination: correct process {o.process} never decided")
            continue
        if o.ret is False or o.ret is None:
            if o.process not in history.crashed:
                problems.append(f"process {o.process} completed without deciding a value")
            continue
        decided[o.process] = o.ret
        if o.ret not in proposed:
            problems.append(f"validity: {o.ret!r} was never proposed")
    if len(set(decided.values())) > 1:
        problems.append(f"agreement: different decisions {decided}")
    if params.get("sentinel_prove"):
        from .reductions import SENTINEL

        valid_marks = [
            e.event_id
            for e in history.marks(params.get("denylist", "dl"))
            if e.data.get("lin") == "prove-valid" and e.data.get("value") == SENTINEL
        ]
        for o in ops:
            if o.name == "propose" and not o.pending and o.ret not in (False, None):
                if not any(m < o.res_id for m in valid_marks):
                    problems.append(f"decision by {o.process} not preceded by any valid sentinel prove")
    if params.get("uncommit_once"):
        for e in history.marks(bundle.object_id):
            if e.data.get("lin") == "uncommit-scan" and len(e.data.get("hits", [])) != 1:
                problems.append(f"uncommit succeeded {len(e.data['hits'])} times for process {e.process}")
    return problems


def check_transfer_audit(bundle, history, params):
    problems = []
    al = bundle.extras["al"]
    initial = bundle.extras["initial_token_ids"]
    appended = {}  # parent -> set of successor tokens
    events = []
    for e in history.marks("at"):
        if e.data.get("lin") == "transfer-append":
            appended.setdefault(e.data["parent"], set()).add(e.data["token"])
            events.append(e)
    for parent, succ in appended.items():
        if len(succ) > 1:
            problems.append(f"double spend: token {parent[:12]} has successors {sorted(succ)}")
    al_proofs = [
        (e.event_id, e.data["value"], e.data["prover"])
        for e in history.marks("al")
        if e.data.get("lin") == "prove-valid"
    ]
    listed = frozenset().union(*[v if v else frozenset() for v in _final_listed(al)])
    for tok in listed - initial:
        makers = [e for e in events if e.data["token"] == tok]
        if not makers:
            problems.append(f"ex nihilo: token {tok[:12]} listed without a transfer")
            continue
        e = makers[0]
        parent = e.data["parent"]
        if not any(
            pos < e.event_id and val == parent and prover == e.data["prover"]
            for (pos, val, prover) in al_proofs
        ):
            problems.append(f"ex nihilo: token {tok[:12]} appended without a prior existence proof")
    return problems


def _final_listed(al):
    arr = al.listed
    if hasattr(arr, "values"):
        return arr.values
    return [reg.value[0] for reg in arr.registers]


def check_evote_audit(bundle, history, params):
    problems = []
    ev = bundle.extras.get("ev", bundle.main)
    slots = ev.votes.values if hasattr(ev.votes, "values") else [r.value[0] for r in ev.votes.registers]
    entries = sorted({e for slot in slots for e in (slot or frozenset())})
    expect = params.get("expect_entries")
    if expect is not None and len(entries) != expect:
        problems.append(f"vote count has {len(entries)} entries, expected {expect}")
    by_token = {}
    for token, value, voters in entries:
        by_token.setdefault(token, set()).add(value)
    for token, values in by_token.items():
        if len(values) > 1:
            problems.append(f"vote unicity violated for token {token}: values {sorted(values)}")
    if params.get("right_to_vote", True):
        issued = {b.nonce: b for b in bundle.extras["ballots"].values()}
        scheme = bundle.extras["scheme"]
        for token, value, voters in entries:
            b = issued.get(token)
            if b is None or not crypto.blind_verify(b.signature, token, scheme.public):
                problems.append(f"counted token {token} has no verifying issuer signature")
    return problems


def check_view_points(bundle, history, params):
    """Every snapshot view must equal the array contents at some instant inside the op."""
    problems = []
    writes = [
        (e.event_id, e.data["slot"], e.data["value"])
        for e in history.marks(bundle.object_id)
        if e.data.get("lin") == "slot-write"
    ]
    for o in build_ops(history, bundle.object_id):
        if o.name != "snapshot" or o.pending:
            continue
        matched = False
        for cut in range(o.inv_id, o.res_id + 1):
            state = [None] * bundle.cfg.n
            for pos, slot, value in writes:
                if pos <= cut:
                    state[slot] = value
            if state == list(o.ret):
                matched = True
                break
        if not matched:
            problems.append(f"snapshot by {o.process} returned {o.ret}, not the array at any instant")
    return problems


def check_monotonic_views(bundle, history, params):
    """For snapshots s1 happening before s2, no slot may regress (by write seq)."""
    problems = []
    seq_of = {(None, s): 0 for s in range(bundle.cfg.n)}
    for e in history.marks(bundle.object_id):
        if e.data.get("lin") == "slot-write":
            seq_of[(e.data["value"], e.data["slot"])] = e.data["seq"]
    snaps = [o for o in build_ops(history, bundle.object_id) if o.name == "snapshot" and not o.pending]
    for a in snaps:
        for b in snaps:
            if a.res_id < b.inv_id:
                for s in range(bundle.cfg.n):
                    if seq_of[(a.ret[s], s)] > seq_of[(b.ret[s], s)]:
                        problems.append(
                            f"slot {s} regressed between snapshots {a.op_id} and {b.op_id}"
                        )
    return problems


CHECKS = {
    "linearizability": check_linearizability,
    "anti-flickering": check_anti_flickering,
    "progress": check_progress,
    "no-consensus": check_no_consensus,
    "consensus-properties": check_consensus_properties,
    "transfer-audit": check_transfer_audit,
    "evote-audit": check_evote_audit,
    "view-points": check_view_points,
    "monotonic-views": check_monotonic_views,
}


def run_checks(bundle, history, checks: list[dict]) -> list[str]:
    problems = []
    for c in checks:
        fn = CHECKS.get(c["type"])
        if fn is None:
            raise scenarios.ConfigError(f"unknown check type {c['type']!r}")
        problems.extend(fn(bundle, history, c))
    return problems


# --- running -----------------------------------------------------------------


def _crash_plan(scn: scenarios.Scenario, seed: int):
    crash = scn.schedule.get("crash")
    if not crash:
        return ()
    if crash.get("mode", "random") == "fixed":
        return tuple((p["process"], p["at_step"]) for p in crash["plan"])
    rng = random.Random((seed << 16) ^ 0xC4A54)
    candidates = crash.get("candidates") or [p["pid"] for p in scn.processes]
    out = []
    for _ in range(crash.get("count", 1)):
        out.append((rng.choice(sorted(candidates)), rng.randrange(crash.get("window", 60))))
    return tuple(out)


def replay_run(scn: scenarios.Scenario, seed: Optional[int] = None, decisions=None):
    """Re-execute one schedule of a scenario; byte-identical to the original run."""
    bundle = scenarios.build(scn)
    if decisions is not None:
        sched = Schedule(seed=seed, decisions=tuple(tuple(d) for d in decisions), extend="first")
    else:
        extend = "roundrobin" if scn.schedule.get("mode") == "roundrobin" else "seed"
        sched = Schedule(seed=seed, crashes=_crash_plan(scn, seed), extend=extend)
    hist = run(bundle.programs, bundle.runtime, sched, max_steps=scn.step_budget)
    return bundle, hist


def run_campaign(scn: scenarios.Scenario, out_dir: Optional[str] = None) -> CampaignReport:
    sched = scn.schedule
    if sched.get("exhaustive"):
        report = _run_exhaustive(scn)
    elif sched.get("crash_sweep"):
        report = _run_crash_sweep(scn)
    else:
        report = _run_seeded(scn)
    if out_dir:
        _write_artifacts(scn, report, out_dir)
    return report


def _record(report, scn, ident, problems, history: Optional[History]):
    report.runs += 1
    if not problems:
        report.passed += 1
        return
    report.violations += 1
    entry = {"id": ident, "problems": problems}
    report.failures.append(entry)
    if report.first_failure is None:
        ff = dict(ident)
        if history is not None:
            ff["decisions"] = [list(d) for d in history.decisions]
            ff["history_jsonl"] = history.jsonl()
        report.first_failure = ff


def _run_one(scn, report, ident, seed=None, decisions=None, prebuilt=None):
    try:
        if prebuilt is not None:
            bundle, hist = prebuilt
        else:
            bundle, hist = replay_run(scn, seed=seed, decisions=decisions)
    except BudgetExceeded as e:
        report.runs += 1
        report.overruns += 1
        report.failures.append({"id": ident, "problems": [f"step budget overrun: {e}"]})
        if report.first_failure is None:
            report.first_failure = dict(ident)
        return
    except SimulationError as e:
        _record(report, scn, ident, [f"simulation invariant violated: {e}"], None)
        return
    problems = run_checks(bundle, hist, scn.checks)
    _record(report, scn, ident, problems, hist)


def _run_seeded(scn: scenarios.Scenario) -> CampaignReport:
    lo, hi = scn.schedule.get("seeds", [0, 100])
    report = CampaignReport(scenario=scn.name, mode="seeds")
    for seed in range(lo, hi):
        _run_one(scn, report, {"seed": seed})
    return report


def _run_exhaustive(scn: scenarios.Scenario) -> CampaignReport:
    report = CampaignReport(scenario=scn.name, mode="exhaustive")
    limit = scn.schedule.get("limit")

    holder = {}

    def build_pair():
        b = scenarios.build(scn)
        holder["bundle"] = b
        return b.runtime, b.programs

    try:
        for decisions, hist in enumerate_runs(build_pair, max_steps=scn.step_budget, limit=limit):
            ident = {"decisions": [list(d) for d in decisions]}
            problems = run_checks(holder["bundle"], hist, scn.checks)
            _record(report, scn, ident, problems, hist)
    except BudgetExceeded as e:
        report.runs += 1
        report.overruns += 1
        report.failures.append({"id": {"decisions": None}, "problems": [str(e)]})
    return report


def _run_crash_sweep(scn: scenarios.Scenario) -> CampaignReport:
    """Crash every process at every decision position of the baseline schedule."""
    report = CampaignReport(scenario=scn.name, mode="crash-sweep")
    params = scn.schedule["crash_sweep"]
    victims = params.get("processes") or [p["pid"] for p in scn.processes]
    base_bundle, base_hist = replay_run(scn, seed=params.get("seed", 0))
    problems = run_checks(base_bundle, base_hist, scn.checks)
    _record(report, scn, {"seed": params.get("seed", 0), "crash": None}, problems, base_hist)
    base = [tuple(d) for d in base_hist.decisions]
    # a process is live until (and including) its last baseline decision
    last = {pid: max((i for i, d in enumerate(base) if d[1] == pid), default=-1) for pid in victims}
    for pos in range(len(base) + 1):
        for pid in victims:
            if pos > last[pid]:
                continue
            decisions = base[:pos] + [("crash", pid)]
            ident = {"crash": {"process": pid, "at": pos}, "seed": params.get("seed", 0)}
            try:
                bundle = scenarios.build(scn)
                hist = run(
                    bundle.programs,
                    bundle.runtime,
                    Schedule(
                        seed=params.get("seed", 0), decisions=tuple(decisions), extend="seed"
                    ),
                    max_steps=scn.step_budget,
                )
            except SimulationError as e:
                _record(report, scn, ident, [f"simulation error: {e}"], None)
                continue
            probs = run_checks(bundle, hist, scn.checks)
            _record(report, scn, ident, probs, hist)
    return report


def _write_artifacts(scn, report: CampaignReport, out_dir: str):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{scn.name}.report.json"
    path.write_text(json.dumps(report.to_json(), sort_keys=True, indent=2))
    report.artifacts.append(str(path))
    if report.first_failure and "history_jsonl" in report.first_failure:
        hpath = out / f"{scn.name}.first-failure.history.jsonl"
        hpath.write_text(report.first_failure["history_jsonl"])
        spath = out / f"{scn.name}.first-failure.schedule.json"
        spath.write_text(
            json.dumps(
                {
                    "seed": report.first_failure.get("seed"),
                    "decisions": report.first_failure.get("decisions"),
                },
                sort_keys=True,
                indent=2,
            )
        )
        report.artifacts.extend([str(hpath), str(spath)])
