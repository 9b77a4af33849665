"""Command-line entry points.

The CLI is a thin client over the service layer: `serve` starts the
HTTP server, `replay` drives a recorded session script against an
in-process app with the LLM gateway in replay mode.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import DynavisError
from .gateway.client import LLMGateway
from .replay.script import ReplayAbortError, load_script, run_script


@click.group()
def main() -> None:
    """Natural-language chart editing engine."""


@main.command()
@click.option("--script", "script_path", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Session script JSON file.")
@click.option("--fixtures", "fixtures_dir", required=True, type=click.Path(exists=True, file_okay=False, path_type=Path), help="Directory of recorded LLM fixtures.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write the full JSON report here.")
@click.option("--fail-fast", is_flag=True, default=False, help="Stop at the first failing step.")
def replay(script_path: Path, fixtures_dir: Path, report_path: Path, fail_fast: bool) -> None:
    """Replay a session script offline and report per-step results."""
    try:
        script = load_script(script_path)
        gateway = LLMGateway(mode="replay", fixture_dir=fixtures_dir)
        outcome = run_script(script, fail_fast=fail_fast, gateway=gateway)
    except ReplayAbortError as exc:
        click.echo(f"replay aborted: {exc.message}", err=True)
        sys.exit(2)
    except DynavisError as exc:
        click.echo(f"replay failed: {exc.message}", err=True)
        sys.exit(2)
    for step in outcome.steps:
        status = "ok" if step["ok"] else f"FAIL ({step.get('error_class', 'unknown')})"
        label = step.get("pointer") or step.get("widget") or ""
        click.echo(f"step {step['index']:>3} {step['kind']:<15} {label:<40} {status}")
    metrics = outcome.metrics
    click.echo(
        f"{metrics.steps_run} steps, {metrics.failures} failures, "
        f"mean retries {metrics.mean_retries:.2f}, mean latency {metrics.mean_latency_ms:.1f} ms"
    )
    if metrics.error_class_counts:
        click.echo("error classes: " + json.dumps(metrics.error_class_counts, sort_keys=True))
    if report_path is not None:
        report_path.write_text(json.dumps(outcome.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        click.echo(f"report written to {report_path}")
    sys.exit(0 if metrics.failures == 0 else 1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
