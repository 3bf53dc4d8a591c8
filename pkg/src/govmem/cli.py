"""Command-line operation of the store, engine, simulator, and service.

Local mode (--store/GOVMEM_ROOT) works directly on a store root and
respects its single-writer lock; remote mode (--api/GOVMEM_API) drives a
running service for the day-to-day operator commands. Exactly one of
the two is active per invocation.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Any, Optional

import click

from .canonical import canonical_dumps
from .engine import GovernanceEngine, utc_clock
from .errors import GovMemError, ValidationError
from .fixtures import fixture_counts, load_bundle, resolve_bundle
from .metrics import provenance_fidelity, selection_traceability
from .model import (
    EvidenceKind,
    EvidenceRef,
    MemoryKind,
    MemoryLayer,
    MemoryRecord,
    Provenance,
    RecordStatus,
)
from .regimes import (
    GovernanceConfig,
    RegimeId,
    load_governance_config,
    save_governance_config,
)
from .sim import ScenarioConfig, replay_paper_traces, reports_to_csv, run_scenario
from .store import StoreHandle

REMOTE_ONLY_HINT = "this command is local-only; drop --api and pass --store"


class CliConfig:
    def __init__(self, store_root: Optional[str], api_url: Optional[str],
                 token: Optional[str], output: str):
        if store_root and api_url:
            raise click.UsageError("pass exactly one of --store or --api, not both")
        if not store_root and not api_url:
            raise click.UsageError(
                "pass --store PATH (or set GOVMEM_ROOT) for local mode, "
                "or --api URL (or GOVMEM_API) for remote mode"
            )
        self.store_root = Path(store_root) if store_root else None
        self.api_url = api_url.rstrip("/") if api_url else None
        self.token = token
        self.output = output

    @property
    def remote(self) -> bool:
        return self.api_url is not None

    def open_store(self, create: bool = False, read_only: bool = False) -> StoreHandle:
        if self.remote:
            raise click.UsageError(REMOTE_ONLY_HINT)
        return StoreHandle(self.store_root, create=create, read_only=read_only)

    def engine(self, store: StoreHandle) -> GovernanceEngine:
        return GovernanceEngine(store)

    def client(self):
        import httpx

        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return httpx.Client(base_url=self.api_url, headers=headers, timeout=30.0)


def emit(ctx_config: CliConfig, payload: Any, human: str = "") -> None:
    if ctx_config.output == "machine":
        click.echo(canonical_dumps(payload))
    else:
        click.echo(human if human else canonical_dumps(payload))


def _record_summary(record: dict[str, Any]) -> str:
    return (
        f"{record['id'][:12]}  {record['status']:<14} {record['kind']:<14} "
        f"{record['resource_id']}"
    )


def _parse_json_arg(raw: str, what: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"{what} is not valid JSON: {exc}") from exc


def _parse_evidence(raw: Optional[str]) -> list[EvidenceRef]:
    if not raw:
        return []
    data = _parse_json_arg(raw, "--evidence")
    if not isinstance(data, list):
        raise click.UsageError("--evidence must be a JSON array of refs")
    try:
        return [EvidenceRef.from_dict(item) for item in data]
    except (KeyError, ValueError) as exc:
        raise click.UsageError(f"malformed evidence ref: {exc}") from exc


@click.group()
@click.option("--store", "store_root", envvar="GOVMEM_ROOT", default=None,
              help="Store root directory (local mode).")
@click.option("--api", "api_url", envvar="GOVMEM_API", default=None,
              help="Service base URL (remote mode).")
@click.option("--token", envvar="GOVMEM_OPERATOR_TOKEN", default=None,
              help="Operator bearer token.")
@click.option("--output", type=click.Choice(["human", "machine"]), default="human")
@click.pass_context
def main(ctx: click.Context, store_root, api_url, token, output) -> None:
    """Governed collaborative memory: stores, regimes, review, simulation."""
    ctx.obj = CliConfig(store_root, api_url, token, output)


def _run(ctx_config: CliConfig, fn) -> None:
    try:
        fn()
    except GovMemError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        if isinstance(exc, ValidationError) and exc.violations:
            for violation in exc.violations:
                click.echo(f"  - {violation}", err=True)
        sys.exit(1)


@main.command()
@click.option("--regime", type=click.Choice([r.value for r in RegimeId]),
              default="human_ratified")
@click.option("--ratifier", default="operator")
@click.option("--ttl-unit", type=click.Choice(["rounds", "days"]), default="rounds")
@click.pass_obj
def init(config: CliConfig, regime, ratifier, ttl_unit) -> None:
    """Create an empty store root with a default governance config."""

    def go():
        store = config.open_store(create=True)
        try:
            gov = GovernanceConfig(
                regime=RegimeId(regime), ratifier=ratifier, ttl_unit=ttl_unit
            )
            save_governance_config(store.root, gov)
            emit(config, {"root": str(store.root), "regime": regime},
                 f"initialized {store.root} (regime={regime})")
        finally:
            store.close()

    _run(config, go)


@main.command("load-fixture")
@click.argument("bundle")
@click.pass_obj
def load_fixture(config: CliConfig, bundle) -> None:
    """Load a fixture bundle (name or path) into the store root."""

    def go():
        if config.remote:
            raise click.UsageError(REMOTE_ONLY_HINT)
        store = load_bundle(resolve_bundle(bundle), config.store_root)
        try:
            counts = fixture_counts(store)
            emit(config, counts,
                 "loaded {b}: {e} events ({r} ratified, {p} pending), "
                 "{pr} active principles, registry {res} resources / {v} versions".format(
                     b=bundle, e=counts["events_total"], r=counts["events_ratified"],
                     p=counts["events_pending"], pr=counts["principles_active"],
                     res=counts["registry_resources"], v=counts["registry_versions"]))
        finally:
            store.close()

    _run(config, go)


@main.command()
@click.option("--agent", required=True, help="Submitting agent id.")
@click.option("--kind", required=True, type=click.Choice([k.value for k in MemoryKind]))
@click.option("--layer", "function_tag", required=True,
              type=click.Choice([l.value for l in MemoryLayer]))
@click.option("--payload", required=True, help="JSON object.")
@click.option("--evidence", default=None, help="JSON array of evidence refs.")
@click.option("--resource-id", default=None)
@click.option("--project-id", default=None)
@click.option("--ttl-rounds", type=int, default=None)
@click.pass_obj
def submit(config: CliConfig, agent, kind, function_tag, payload, evidence,
           resource_id, project_id, ttl_rounds) -> None:
    """Submit a candidate memory through governance routing."""
    payload_obj = _parse_json_arg(payload, "--payload")
    evidence_refs = _parse_evidence(evidence)

    def go():
        if config.remote:
            with config.client() as client:
                response = client.post("/candidates", json={
                    "payload": payload_obj, "kind": kind, "function_tag": function_tag,
                    "evidence": [e.to_dict() for e in evidence_refs],
                    "resource_id": resource_id, "project_id": project_id,
                    "ttl_rounds": ttl_rounds,
                }, headers={"X-Agent-Id": agent})
                _raise_for_api(response)
                record = response.json()
        else:
            store = config.open_store()
            try:
                engine = config.engine(store)
                record = engine.submit_candidate(
                    payload=payload_obj, kind=MemoryKind(kind), author=agent,
                    function_tag=MemoryLayer(function_tag), evidence=evidence_refs,
                    resource_id=resource_id, project_id=project_id,
                    ttl_rounds=ttl_rounds,
                ).to_dict()
            finally:
                store.close()
        emit(config, record, _record_summary(record))

    _run(config, go)


@main.command()
@click.pass_obj
def queue(config: CliConfig) -> None:
    """List candidates awaiting ratification, oldest first."""

    def go():
        if config.remote:
            with config.client() as client:
                response = client.get("/review-queue")
                _raise_for_api(response)
                entries = response.json()["entries"]
        else:
            store = config.open_store(read_only=True)
            try:
                entries = config.engine(store).queue_view()
            finally:
                store.close()
        if config.output == "machine":
            emit(config, {"entries": entries})
            return
        if not entries:
            click.echo("queue empty")
            return
        for entry in entries:
            click.echo(f"{entry['candidate_id'][:12]}  {entry['kind']:<10} "
                       f"{entry['resource_id']}  by {entry['drafted_by']}")

    _run(config, go)


@main.command()
@click.argument("candidate_id")
@click.option("--outcome", required=True,
              type=click.Choice(["ratify", "reject", "abstain"]))
@click.option("--note", default="")
@click.option("--yes", is_flag=True, help="Skip the confirmation prompt.")
@click.pass_obj
def decide(config: CliConfig, candidate_id, outcome, note, yes) -> None:
    """Apply a terminal decision to a pending candidate."""

    def go():
        if config.remote:
            with config.client() as client:
                if config.output == "human" and not yes:
                    _show_candidate_remote(client, candidate_id)
                    click.confirm(f"{outcome} this candidate?", abort=True)
                response = client.post("/decisions", json={
                    "candidate_id": candidate_id, "outcome": outcome, "note": note,
                })
                _raise_for_api(response)
                record = response.json()
        else:
            store = config.open_store()
            try:
                engine = config.engine(store)
                if config.output == "human" and not yes:
                    _show_candidate_local(store, candidate_id)
                    click.confirm(f"{outcome} this candidate?", abort=True)
                record = engine.apply_decision(
                    candidate_id, outcome,
                    ratifier=engine.config.ratifier, note=note,
                ).to_dict()
            finally:
                store.close()
        emit(config, record, _record_summary(record))

    _run(config, go)


def _show_candidate_local(store: StoreHandle, candidate_id: str) -> None:
    record = store.get(candidate_id)
    click.echo(f"candidate {candidate_id[:12]} ({record.kind.value}, "
               f"drafted by {record.provenance.drafted_by})")
    click.echo(f"  payload: {canonical_dumps(dict(record.payload))}")
    for ref in record.provenance.evidence:
        line = f"  evidence [{ref.kind.value}] {ref.value}"
        if ref.kind is EvidenceKind.RECORD_ID and store.has(ref.value):
            cited = store.get(ref.value)
            line += f" -> {cited.kind.value} {cited.resource_id}"
        click.echo(line)


def _show_candidate_remote(client, candidate_id: str) -> None:
    response = client.get("/review-queue")
    _raise_for_api(response)
    for entry in response.json()["entries"]:
        if entry["candidate_id"] == candidate_id:
            click.echo(f"candidate {candidate_id[:12]} ({entry['kind']}, "
                       f"drafted by {entry['drafted_by']})")
            click.echo(f"  payload: {canonical_dumps(entry['payload'])}")
            for ref in entry["evidence"]:
                click.echo(f"  evidence [{ref['kind']}] {ref['summary']}")
            return
    click.echo(f"candidate {candidate_id[:12]} is not in the queue")


@main.command()
@click.argument("resource_id")
@click.option("--payload", required=True, help="JSON object for the new version.")
@click.option("--evidence", default=None, help="JSON array of evidence refs.")
@click.option("--note", default="")
@click.pass_obj
def supersede(config: CliConfig, resource_id, payload, evidence, note) -> None:
    """Propose a correcting version of an active resource."""
    payload_obj = _parse_json_arg(payload, "--payload")
    evidence_refs = _parse_evidence(evidence)

    def go():
        if config.remote:
            with config.client() as client:
                response = client.post("/supersede", json={
                    "resource_id": resource_id, "new_payload": payload_obj,
                    "evidence": [e.to_dict() for e in evidence_refs], "note": note,
                })
                _raise_for_api(response)
                record = response.json()
        else:
            store = config.open_store()
            try:
                engine = config.engine(store)
                record = engine.supersede(
                    resource_id, payload_obj, evidence=evidence_refs,
                    author=engine.config.ratifier, note=note,
                ).to_dict()
            finally:
                store.close()
        emit(config, record, _record_summary(record))

    _run(config, go)


@main.command()
@click.argument("resource_id")
@click.pass_obj
def lineage(config: CliConfig, resource_id) -> None:
    """Show a resource's full version chain, rejections included."""

    def go():
        if config.remote:
            with config.client() as client:
                response = client.get(f"/lineage/{resource_id}")
                _raise_for_api(response)
                chain = response.json()
        else:
            store = config.open_store(read_only=True)
            try:
                chain = store.lineage(resource_id).to_dict()
            finally:
                store.close()
        if config.output == "machine":
            emit(config, chain)
            return
        click.echo(resource_id)
        for version in chain["versions"]:
            decided = version["decided_at"] or "-"
            click.echo(f"  {version['id'][:12]}  {version['status']:<12} {decided}")

    _run(config, go)


@main.command("audit-legacy")
@click.argument("legacy_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mark-resource", default=None,
              help="Also mark this registry resource's latest version unselected.")
@click.option("--yes", is_flag=True, help="Skip the confirmation prompt.")
@click.pass_obj
def audit_legacy(config: CliConfig, legacy_file, mark_resource, yes) -> None:
    """Ingest a pre-governance memory file as unselected records.

    The file holds one JSON object per line: {"resource_id", "kind",
    "payload", "created_at"?}. Nothing enters the shared active view.
    """

    def go():
        entries = []
        for line_no, raw in enumerate(Path(legacy_file).read_text().splitlines(), 1):
            if not raw.strip():
                continue
            data = _parse_json_arg(raw, f"{legacy_file}:{line_no}")
            entries.append(
                MemoryRecord(
                    resource_id=data["resource_id"],
                    kind=MemoryKind(data.get("kind", "local_note")),
                    layer=MemoryLayer.SHARED_INSTITUTIONAL,
                    status=RecordStatus.UNSELECTED,
                    payload=data.get("payload", {}),
                    provenance=Provenance(drafted_by="legacy-import"),
                    created_at=data.get("created_at", utc_clock()),
                )
            )
        if config.output == "human" and not yes:
            for entry in entries:
                click.echo(f"  {entry.resource_id}: "
                           f"{canonical_dumps(dict(entry.payload))[:80]}")
            click.confirm(
                f"import {len(entries)} record(s) as unselected?", abort=True
            )
        store = config.open_store()
        try:
            ids, failures = store.ingest_legacy(entries, at=utc_clock())
            transition = None
            if mark_resource:
                chain = store.lineage(mark_resource)
                transition = store.mark_unselected(
                    chain.versions[-1][0],
                    [EvidenceRef(EvidenceKind.FREE_TEXT,
                                 f"legacy audit import of {len(ids)} records")],
                    at=utc_clock(),
                )
            result = {
                "imported": ids,
                "failures": [{"index": i, "reason": r} for i, r in failures],
                "marked_unselected": transition,
            }
            emit(config, result,
                 f"imported {len(ids)} unselected record(s), "
                 f"{len(failures)} failure(s)")
        finally:
            store.close()

    _run(config, go)


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--regime", "regime_name", default="all",
              type=click.Choice(["all"] + [r.value for r in RegimeId]))
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Write canonical reports and CSV here.")
@click.pass_obj
def simulate(config: CliConfig, scenario_file, regime_name, seed, out_dir) -> None:
    """Run the scenario through one regime (or all four) and report."""

    def go():
        if config.remote:
            raise click.UsageError(REMOTE_ONLY_HINT)
        scenario = ScenarioConfig.load(scenario_file)
        if seed is not None:
            scenario = ScenarioConfig.from_dict({**scenario.to_dict(), "seed": seed})
        regimes = list(RegimeId) if regime_name == "all" else [RegimeId(regime_name)]
        reports = [run_scenario(scenario, regime) for regime in regimes]
        csv_text = reports_to_csv(reports)
        if out_dir:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            for report in reports:
                path = out / f"report-{report.regime.value}.json"
                path.write_bytes(report.canonical() + b"\n")
            (out / "reports.csv").write_text(csv_text)
        if config.output == "machine":
            for report in reports:
                click.echo(report.canonical().decode("utf-8"))
        else:
            click.echo(csv_text.rstrip("\n"))

    _run(config, go)


@main.command("replay-traces")
@click.argument("bundle", default="paper-ecosystem")
@click.pass_obj
def replay_traces(config: CliConfig, bundle) -> None:
    """Replay the five reference-ecosystem traces and report pass/fail."""

    def go():
        report = replay_paper_traces(bundle)
        if config.output == "machine":
            click.echo(report.canonical().decode("utf-8"))
        else:
            for check in report.checks:
                mark = "PASS" if check.passed else "FAIL"
                click.echo(f"{mark} {check.trace}")
            click.echo("all traces passed" if report.all_passed else "TRACE FAILURES")
        if not report.all_passed:
            sys.exit(1)

    _run(config, go)


@main.command()
@click.pass_obj
def metrics(config: CliConfig) -> None:
    """Governance metrics snapshot: fidelity, traceability, counts, queue."""

    def go():
        if config.remote:
            with config.client() as client:
                response = client.get("/metrics")
                _raise_for_api(response)
                snapshot = response.json()
        else:
            store = config.open_store(read_only=True)
            try:
                engine = config.engine(store)
                counts = fixture_counts(store)
                snapshot = {
                    "provenance_fidelity": provenance_fidelity(store),
                    "selection_traceability": selection_traceability(store),
                    "status_counts": store.status_counts(
                        MemoryLayer.SHARED_INSTITUTIONAL
                    ),
                    "store_counts": counts,
                    "queue_depth": len(engine.queue),
                    "regime": engine.config.regime.value,
                }
            finally:
                store.close()
        if config.output == "machine":
            emit(config, snapshot)
            return
        counts = snapshot["store_counts"]
        click.echo(
            "events {}/{} ratified, {} pending | principles {} active | "
            "registry {} resources / {} versions".format(
                counts["events_ratified"], counts["events_total"],
                counts["events_pending"], counts["principles_active"],
                counts["registry_resources"], counts["registry_versions"],
            )
        )
        click.echo(
            "provenance_fidelity={} selection_traceability={} queue_depth={}".format(
                snapshot["provenance_fidelity"],
                snapshot["selection_traceability"],
                snapshot["queue_depth"],
            )
        )

    _run(config, go)


@main.command()
@click.option("--host", default="127.0.0.1", envvar="GOVMEM_HOST")
@click.option("--port", default=8077, type=int, envvar="GOVMEM_PORT")
@click.pass_obj
def serve(config: CliConfig, host, port) -> None:
    """Serve the HTTP API over the store root."""

    def go():
        if config.remote:
            raise click.UsageError(REMOTE_ONLY_HINT)
        from .api import serve as serve_api

        serve_api(config.store_root, host=host, port=port,
                  operator_token=config.token)

    _run(config, go)


def _raise_for_api(response) -> None:
    if response.status_code >= 400:
        try:
            body = response.json()
            message = body.get("message", response.text)
            code = body.get("code", "error")
        except json.JSONDecodeError:
            message, code = response.text, "error"
        exc = GovMemError(f"{message} (HTTP {response.status_code})")
        exc.code = code
        raise exc


if __name__ == "__main__":
    main()
