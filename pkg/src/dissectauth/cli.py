"""Command-line entry points: serve the API, run simulations, export profiles."""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path

import click


@click.group()
def main() -> None:
    """Adaptive authentication service and traffic simulator."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file (env vars override).")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path: str | None, host: str | None, port: int | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app, load_config

    config = load_config(config_path)
    if host:
        config.host = host
    if port:
        config.port = port
    app = create_app(config=config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None,
              help="Scenario JSON; defaults to the packaged default scenario.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--mode", type=click.Choice(["http", "inprocess"]), default="inprocess")
@click.option("--base-url", default="http://127.0.0.1:8200", help="Service URL for http mode.")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write the JSON report here.")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Per-attempt CSV records.")
def simulate(scenario_path, seed, mode, base_url, out_path, csv_path) -> None:
    """Generate benign and adversarial login traffic and report the outcomes."""
    from .simulator import run

    if scenario_path is None:
        packaged = resources.files("dissectauth.data").joinpath("default_scenario.json")
        scenario_path = str(packaged)
    try:
        report = run(
            scenario_path, seed=seed, mode=mode, base_url=base_url,
            out_path=out_path, csv_path=csv_path,
        )
    except ConnectionError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(report.table())
    click.echo()
    doc = report.to_dict()
    click.echo(f"benign allow rate:   {doc['benign_allow_rate']}")
    click.echo(f"benign lockout rate: {doc['benign_lockout_rate']}")
    for kind, rate in doc["attacker_success_rates"].items():
        click.echo(f"{kind} success rate: {rate}")
    if out_path:
        click.echo(f"report written to {out_path}")


@main.command("export-schema")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Write the wire-contract JSON Schemas here.")
def export_schema(out_path) -> None:
    """Emit the published JSON Schemas for the client-facing request bodies."""
    from .service.schemas import (
        AttemptRequest,
        ChallengeAnswerRequest,
        CreateUserRequest,
        OpenSessionRequest,
    )

    doc = {
        "attempt_request": AttemptRequest.model_json_schema(),
        "create_user_request": CreateUserRequest.model_json_schema(),
        "open_session_request": OpenSessionRequest.model_json_schema(),
        "challenge_answer_request": ChallengeAnswerRequest.model_json_schema(),
    }
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")
    click.echo(f"wire schemas written to {out_path}")


@main.command("export-user")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--username", required=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def export_user(config_path, username, out_path) -> None:
    """Dump a user's permanent-scope history as a single JSON document."""
    from .store import ProfileStore, SecretVault, master_key_from_hex
    from .service import load_config

    config = load_config(config_path)
    store = ProfileStore(
        config.storage_root,
        SecretVault(master_key_from_hex(config.master_key_hex)),
        default_scheme=config.scheme(),
        snapshot_every=0,
    )
    try:
        doc = store.export_user(username)
    finally:
        store.close()
    text = json.dumps(doc, indent=2)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"written to {out_path}")
    else:
        click.echo(text)


if __name__ == "__main__":
    main()
