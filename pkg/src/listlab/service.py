"""HTTP face of the lab: campaigns, replays, and offline history checks.

The service is stateless: every request carries its scenario (the same
mapping the YAML configs hold), runs synchronously, and returns the full
report.  The CLI is a thin client of these endpoints; it mounts the app
in-process by default, so the wire format is exercised even without a
server.
"""
from __future__ import annotations

import json
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, campaign, checker, model, scenarios
from .sim import build_ops, history_from_events


class Overrides(BaseModel):
    seeds: Optional[tuple[int, int]] = None
    exhaustive: Optional[bool] = None
    crypto_mode: Optional[str] = None
    step_budget: Optional[int] = None


class CampaignRequest(BaseModel):
    scenario: dict
    overrides: Optional[Overrides] = None


class CampaignResponse(BaseModel):
    scenario: str
    mode: str
    runs: int
    passed: int
    violations: int
    overruns: int
    ok: bool
    failures: list[dict]
    first_failure: Optional[dict] = None


class ReplayRequest(BaseModel):
    scenario: dict
    seed: Optional[int] = None
    decisions: Optional[list[list]] = None


class ReplayResponse(BaseModel):
    history_jsonl: list[str]
    schedule: dict
    crashed: list[int]


class SpecModel(BaseModel):
    kind: str = Field(description="allowlist | denylist | array | consensus")
    system: Optional[dict] = None
    tag: str = ""
    crypto_mode: str = "explicit"
    width: Optional[int] = None


class CheckRequest(BaseModel):
    events: list[dict]
    object: str
    spec: SpecModel
    bound: int = 20


class CheckResponse(BaseModel):
    linearizable: bool
    witness: Optional[list[int]] = None
    violation: Optional[str] = None


def apply_overrides(scenario: dict, overrides: Optional[Overrides]) -> dict:
    scn = json.loads(json.dumps(scenario))  # deep copy, keeps request immutable
    if overrides is None:
        return scn
    sched = scn.setdefault("schedule", {})
    if overrides.seeds is not None:
        sched["seeds"] = list(overrides.seeds)
        sched.pop("exhaustive", None)
    if overrides.exhaustive is not None:
        sched["exhaustive"] = overrides.exhaustive
        if overrides.exhaustive:
            sched.pop("seeds", None)
    if overrides.crypto_mode is not None:
        scn.setdefault("object", {}).setdefault("options", {})["crypto_mode"] = overrides.crypto_mode
    if overrides.step_budget is not None:
        scn["step_budget"] = overrides.step_budget
    return scn


def spec_from_model(sm: SpecModel) -> checker.SequentialSpec:
    if sm.kind in ("allowlist", "denylist"):
        if not sm.system:
            raise scenarios.ConfigError("field 'spec.system' is required for list specs")
        cfg = model.SystemConfig(
            n=sm.system["n"],
            managers=frozenset(sm.system["managers"]),
            verifiers=frozenset(sm.system["verifiers"]),
        )
        return checker.ProofListSpec(cfg, model.Kind(sm.kind), tag=sm.tag, proof_mode=sm.crypto_mode)
    if sm.kind == "array":
        if not sm.width:
            raise scenarios.ConfigError("field 'spec.width' is required for the array spec")
        return checker.ArraySpec(width=sm.width, initial=None)
    if sm.kind == "consensus":
        return checker.ConsensusSpec()
    raise scenarios.ConfigError(f"field 'spec.kind' has unknown kind {sm.kind!r}")


app = FastAPI(title="listlab", version=__version__)


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.get("/catalog")
def catalog():
    from . import catalog as cat

    return {
        "object_kinds": sorted(scenarios._BUILDERS),
        "programs": sorted(scenarios._PROGRAMS),
        "checks": sorted(campaign.CHECKS),
        "scenarios": sorted(cat.CATALOG),
    }


@app.post("/campaigns/run", response_model=CampaignResponse)
def campaigns_run(req: CampaignRequest):
    try:
        scn = scenarios.parse_scenario(apply_overrides(req.scenario, req.overrides))
        report = campaign.run_campaign(scn)
    except scenarios.ConfigError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return CampaignResponse(**report.to_json())


@app.post("/replay", response_model=ReplayResponse)
def replay(req: ReplayRequest):
    try:
        scn = scenarios.parse_scenario(req.scenario)
        _bundle, hist = campaign.replay_run(scn, seed=req.seed, decisions=req.decisions)
    except scenarios.ConfigError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return ReplayResponse(
        history_jsonl=hist.jsonl().splitlines(),
        schedule=hist.schedule_json(),
        crashed=sorted(hist.crashed),
    )


@app.post("/check", response_model=CheckResponse)
def check_history(req: CheckRequest):
    try:
        spec = spec_from_model(req.spec)
        hist = history_from_events(req.events)
        ops = build_ops(hist, req.object)
        verdict = checker.check(ops, spec, bound=req.bound)
    except scenarios.ConfigError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except checker.CheckBoundExceeded as e:
        raise HTTPException(status_code=422, detail=str(e))
    return CheckResponse(**verdict.to_json())
