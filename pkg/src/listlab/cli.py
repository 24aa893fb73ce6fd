"""Batch CLI: a thin client over the HTTP service.

Every command builds a request and sends it through httpx.  Without
--server the service app is mounted in-process (ASGI transport), so the
same request/response models run either way; with --server the requests go
to a remote instance.

Exit codes: 0 all checks green, 1 violations or overruns, 2 bad config.
"""
from __future__ import annotations

import asyncio
import json
import pathlib
import sys

import click
import httpx
import yaml


def _client(server: str | None) -> httpx.AsyncClient:
    if server:
        return httpx.AsyncClient(base_url=server, timeout=None)
    from .service import app

    return httpx.AsyncClient(transport=httpx.ASGITransport(app=app), base_url="http://listlab", timeout=None)


def _post(server, path, payload):
    async def go():
        async with _client(server) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _load_config(path: str) -> dict:
    if path.startswith("builtin:"):
        from . import catalog

        try:
            return catalog.get(path.split(":", 1)[1])
        except KeyError as e:
            raise click.ClickException(str(e))
    try:
        data = yaml.safe_load(pathlib.Path(path).read_text())
    except yaml.YAMLError as e:
        raise click.ClickException(f"cannot parse {path}: {e}")
    if not isinstance(data, dict):
        raise click.ClickException(f"{path} does not contain a scenario mapping")
    return data


def _fail_422(resp) -> None:
    click.echo(f"config error: {resp.json()['detail']}", err=True)
    sys.exit(2)


@click.group()
def main():
    """Campaign harness for the list-object lab."""


@main.command()
@click.argument("config")
@click.option("--seeds", help="seed range LO:HI, overrides the config")
@click.option("--exhaustive", is_flag=True, default=False, help="exhaustive schedule enumeration")
@click.option("--out", type=click.Path(), help="directory for report and failure artifacts")
@click.option("--crypto-mode", type=click.Choice(["explicit", "mock-zk"]), help="proof mode override")
@click.option("--step-budget", type=int, help="per-run shared-step budget override")
@click.option("--server", help="remote service URL (default: in-process)")
def run(config, seeds, exhaustive, out, crypto_mode, step_budget, server):
    """Run a scenario campaign and report per-seed verdicts."""
    overrides = {}
    if seeds:
        try:
            lo, hi = (int(x) for x in seeds.split(":"))
        except ValueError:
            raise click.ClickException("--seeds must look like LO:HI")
        overrides["seeds"] = [lo, hi]
    if exhaustive:
        overrides["exhaustive"] = True
    if crypto_mode:
        overrides["crypto_mode"] = crypto_mode
    if step_budget:
        overrides["step_budget"] = step_budget
    resp = _post(server, "/campaigns/run", {"scenario": _load_config(config), "overrides": overrides or None})
    if resp.status_code == 422:
        _fail_422(resp)
    resp.raise_for_status()
    report = resp.json()
    click.echo(
        f"{report['scenario']} [{report['mode']}]: {report['passed']}/{report['runs']} passed, "
        f"{report['violations']} violations, {report['overruns']} overruns"
    )
    for f in report["failures"][:5]:
        click.echo(f"  FAIL {json.dumps(f['id'])}: {'; '.join(f['problems'][:3])}")
    if out:
        outdir = pathlib.Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{report['scenario']}.report.json").write_text(
            json.dumps(report, sort_keys=True, indent=2)
        )
        ff = report.get("first_failure") or {}
        if "history_jsonl" in ff:
            (outdir / f"{report['scenario']}.first-failure.history.jsonl").write_text(ff["history_jsonl"])
            (outdir / f"{report['scenario']}.first-failure.schedule.json").write_text(
                json.dumps({"seed": ff.get("seed"), "decisions": ff.get("decisions")}, sort_keys=True)
            )
        click.echo(f"artifacts written to {outdir}")
    sys.exit(0 if report["ok"] else 1)


@main.command()
@click.argument("config")
@click.option("--seed", type=int, help="seed to replay")
@click.option("--schedule", "schedule_file", type=click.Path(exists=True), help="schedule JSON with decisions")
@click.option("--out", type=click.Path(), help="write history JSONL here instead of stdout")
@click.option("--server", help="remote service URL (default: in-process)")
def replay(config, seed, schedule_file, out, server):
    """Re-execute one schedule of a scenario; prints the exact history."""
    payload = {"scenario": _load_config(config), "seed": seed}
    if schedule_file:
        sched = json.loads(pathlib.Path(schedule_file).read_text())
        payload["decisions"] = sched.get("decisions")
        if payload["seed"] is None:
            payload["seed"] = sched.get("seed")
    resp = _post(server, "/replay", payload)
    if resp.status_code == 422:
        _fail_422(resp)
    resp.raise_for_status()
    body = resp.json()
    text = "\n".join(body["history_jsonl"])
    if out:
        pathlib.Path(out).write_text(text)
        click.echo(f"history written to {out}")
    else:
        click.echo(text)


@main.command()
@click.argument("history", type=click.Path(exists=True))
@click.option("--object", "object_id", required=True, help="object id whose sub-history to check")
@click.option("--kind", required=True, type=click.Choice(["allowlist", "denylist", "array", "consensus"]))
@click.option("-n", "n_procs", type=int, help="process count (list/array specs)")
@click.option("--managers", help="comma-separated manager pids")
@click.option("--verifiers", help="comma-separated verifier pids")
@click.option("--tag", default="", help="proof domain tag (defaults to the object id)")
@click.option("--bound", type=int, default=20)
@click.option("--server", help="remote service URL (default: in-process)")
def check(history, object_id, kind, n_procs, managers, verifiers, tag, bound, server):
    """Check an exported history JSONL against a sequential spec."""
    events = [json.loads(line) for line in pathlib.Path(history).read_text().splitlines() if line]
    spec = {"kind": kind, "tag": tag or object_id}
    if kind in ("allowlist", "denylist"):
        if not (n_procs and managers and verifiers):
            raise click.ClickException("list specs need -n, --managers and --verifiers")
        spec["system"] = {
            "n": n_procs,
            "managers": [int(x) for x in managers.split(",")],
            "verifiers": [int(x) for x in verifiers.split(",")],
        }
    if kind == "array":
        spec["width"] = n_procs
    resp = _post(server, "/check", {"events": events, "object": object_id, "spec": spec, "bound": bound})
    if resp.status_code == 422:
        _fail_422(resp)
    resp.raise_for_status()
    verdict = resp.json()
    click.echo(json.dumps(verdict, sort_keys=True))
    sys.exit(0 if verdict["linearizable"] else 1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("listlab.service:app", host=host, port=port)


@main.command()
@click.option("--server", help="remote service URL (default: in-process)")
def catalog(server):
    """List available object kinds, programs and checks."""

    async def go():
        async with _client(server) as client:
            return await client.get("/catalog")

    resp = asyncio.run(go())
    resp.raise_for_status()
    click.echo(json.dumps(resp.json(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
