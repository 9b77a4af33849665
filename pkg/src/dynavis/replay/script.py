"""Headless session replay.

A session script is a JSON file: a dataset reference plus an ordered
list of steps. The harness drives the REST service in-process with the
gateway in replay mode, runs widget callbacks through the sandbox, and
reports per-step results plus aggregate metrics. Per-step reports carry
no timings, so two replays of the same script compare equal; latency
lives only in the aggregate metrics.
"""

from __future__ import annotations

import asyncio
import dataclasses
import json
import time
from pathlib import Path
from typing import Any, Optional

import httpx

from ..chart.model import ChartSpec, get_property, has_path
from ..errors import DynavisError, InvalidRequestError
from ..sandbox.runner import run_widget_event
from ..service.app import create_app
from ..service.sessions import SessionStore
from ..gateway.client import LLMGateway
from ..widgets.model import Widget

STEP_KINDS = ("chart_command", "widget_command", "widget_event", "toggle", "assert")

SCRIPT_VERSION = 1


@dataclasses.dataclass(frozen=True)
class SessionScript:
    dataset_csv: str
    steps: tuple
    source: str = ""


@dataclasses.dataclass(frozen=True)
class ReplayMetrics:
    steps_run: int
    failures: int
    mean_retries: float
    mean_latency_ms: float
    error_class_counts: dict

    def to_json(self) -> dict:
        return {
            "steps_run": self.steps_run,
            "failures": self.failures,
            "mean_retries": self.mean_retries,
            "mean_latency_ms": self.mean_latency_ms,
            "error_class_counts": dict(self.error_class_counts),
        }


@dataclasses.dataclass(frozen=True)
class ReplayOutcome:
    metrics: ReplayMetrics
    steps: tuple

    def to_json(self) -> dict:
        return {"metrics": self.metrics.to_json(), "steps": list(self.steps)}


def _require(condition: bool, message: str, path: str = "") -> None:
    if not condition:
        raise InvalidRequestError(f"bad session script: {message}", detail_path=path or None)


def load_script(path: Path) -> SessionScript:
    """Parse and structurally check a script file."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidRequestError(f"bad session script: not valid JSON: {exc}")
    _require(isinstance(payload, dict), "top level must be an object")
    _require(payload.get("version") == SCRIPT_VERSION, f"version must be {SCRIPT_VERSION}", "/version")
    dataset = payload.get("dataset")
    _require(isinstance(dataset, dict), "dataset must be an object", "/dataset")
    if "path" in dataset:
        csv_path = Path(dataset["path"])
        if not csv_path.is_absolute():
            csv_path = path.parent / csv_path
        _require(csv_path.exists(), f"dataset file not found: {csv_path}", "/dataset/path")
        csv_text = csv_path.read_text(encoding="utf-8")
    elif "csv" in dataset:
        _require(isinstance(dataset["csv"], str), "dataset.csv must be a string", "/dataset/csv")
        csv_text = dataset["csv"]
    else:
        _require(False, "dataset needs a path or inline csv", "/dataset")
    raw_steps = payload.get("steps")
    _require(isinstance(raw_steps, list), "steps must be an array", "/steps")
    known_refs = False
    for i, step in enumerate(raw_steps):
        where = f"/steps/{i}"
        _require(isinstance(step, dict), "step must be an object", where)
        kind = step.get("kind")
        _require(kind in STEP_KINDS, f"unknown step kind {kind!r}", where + "/kind")
        if kind in ("chart_command", "widget_command"):
            _require(
                isinstance(step.get("command"), str) and step["command"].strip() != "",
                "command must be a non-empty string",
                where + "/command",
            )
            known_refs = True
        elif kind == "widget_event":
            _require(isinstance(step.get("widget"), str), "widget ref required", where + "/widget")
            _require(isinstance(step.get("target_id"), str), "target_id required", where + "/target_id")
            _require(known_refs, "widget_event before any widget can exist", where)
        elif kind == "toggle":
            _require(isinstance(step.get("widget"), str), "widget ref required", where + "/widget")
            _require(isinstance(step.get("enabled"), bool), "enabled must be a boolean", where + "/enabled")
            _require(known_refs, "toggle before any widget can exist", where)
        else:
            _require(isinstance(step.get("pointer"), str), "pointer required", where + "/pointer")
            _require(
                "equals" in step or "exists" in step,
                "assert needs equals or exists",
                where,
            )
    return SessionScript(dataset_csv=csv_text, steps=tuple(raw_steps), source=str(path))


class ReplayAbortError(DynavisError):
    """Unrecoverable replay condition (missing fixture, broken service).

    Anything that makes the remaining steps meaningless aborts the run;
    ordinary step failures are recorded and the run continues.
    """

    error_kind = "replay_abort"


class _Driver:
    """One replay run against an in-process service."""

    def __init__(self, client: httpx.AsyncClient):
        self.client = client
        self.session_id: Optional[str] = None

    async def request(self, method: str, url: str, **kwargs) -> httpx.Response:
        response = await self.client.request(method, url, **kwargs)
        if response.status_code >= 400:
            try:
                body = response.json()
            except json.JSONDecodeError:
                raise ReplayAbortError(f"{method} {url} returned {response.status_code} with a non-JSON body")
            if body.get("error_kind") == "replay_miss":
                raise ReplayAbortError(f"replay fixture missing: {body.get('message', '')}")
        return response

    async def create_session(self, csv_text: str) -> str:
        response = await self.request("POST", "/api/sessions", json={"csv": csv_text})
        if response.status_code != 201:
            raise ReplayAbortError(f"session creation failed: {response.text[:300]}")
        self.session_id = response.json()["session_id"]
        return self.session_id

    async def snapshot(self) -> dict:
        response = await self.request("GET", f"/api/sessions/{self.session_id}")
        if response.status_code != 200:
            raise ReplayAbortError(f"snapshot failed: {response.text[:300]}")
        return response.json()

    async def effective(self) -> dict:
        response = await self.request("GET", f"/api/sessions/{self.session_id}/effective-spec")
        if response.status_code != 200:
            raise ReplayAbortError(f"effective-spec failed: {response.text[:300]}")
        return response.json()["spec"]


def _error_kind(response: httpx.Response) -> str:
    try:
        return response.json().get("error_kind", f"http_{response.status_code}")
    except json.JSONDecodeError:
        return f"http_{response.status_code}"


def _meta_retries(meta: dict) -> int:
    attempts = int(meta.get("attempts", 1))
    repair_rounds = int(meta.get("repair_rounds", 0))
    return (attempts - 1) * 2 + repair_rounds


async def _run_step(driver: _Driver, step: dict) -> tuple[dict, Optional[int]]:
    """Execute one step; returns (report, retries or None)."""
    kind = step["kind"]
    session = driver.session_id

    if kind == "chart_command":
        response = await driver.request(
            "POST", f"/api/sessions/{session}/chart-commands", json={"command": step["command"]}
        )
        if response.status_code != 200:
            return {"kind": kind, "ok": False, "error_class": _error_kind(response)}, None
        body = response.json()
        meta = body.get("meta", {})
        report = {
            "kind": kind,
            "ok": True,
            "attempts": meta.get("attempts"),
            "repair_rounds": meta.get("repair_rounds"),
            "auto_widget": body.get("auto_widget", {}).get("id") if "auto_widget" in body else None,
        }
        return report, _meta_retries(meta)

    if kind == "widget_command":
        response = await driver.request(
            "POST", f"/api/sessions/{session}/widget-commands", json={"command": step["command"]}
        )
        if response.status_code != 200:
            return {"kind": kind, "ok": False, "error_class": _error_kind(response)}, None
        widget = response.json()["widget"]
        return {"kind": kind, "ok": True, "widget": widget["id"]}, None

    if kind == "widget_event":
        snapshot = await driver.snapshot()
        match = [w for w in snapshot["widgets"] if w["id"] == step["widget"]]
        if not match:
            return {
                "kind": kind,
                "ok": False,
                "error_class": "unknown_widget",
                "widget": step["widget"],
            }, None
        widget = Widget.from_json(match[0])
        base_chart = snapshot.get("base_chart")
        if base_chart is None:
            return {"kind": kind, "ok": False, "error_class": "no_base_chart"}, None
        result = await asyncio.to_thread(
            run_widget_event,
            widget,
            step["target_id"],
            step.get("value"),
            ChartSpec(base_chart),
            step.get("checked"),
        )
        if result.diagnostic is not None:
            return {
                "kind": kind,
                "ok": False,
                "error_class": result.diagnostic.kind,
                "widget": widget.id,
            }, None
        response = await driver.request(
            "POST",
            f"/api/sessions/{session}/widgets/{widget.id}/result",
            json={
                "transforms": list(result.transforms),
                "chart": result.chart.document,
            },
        )
        if response.status_code != 200:
            return {
                "kind": kind,
                "ok": False,
                "error_class": _error_kind(response),
                "widget": widget.id,
            }, None
        return {"kind": kind, "ok": True, "widget": widget.id}, None

    if kind == "toggle":
        response = await driver.request(
            "POST",
            f"/api/sessions/{session}/widgets/{step['widget']}/toggle",
            json={"enabled": step["enabled"]},
        )
        if response.status_code != 200:
            return {
                "kind": kind,
                "ok": False,
                "error_class": _error_kind(response),
                "widget": step["widget"],
            }, None
        return {"kind": kind, "ok": True, "widget": step["widget"]}, None

    # assert
    spec = await driver.effective()
    pointer = step["pointer"]
    present = has_path(spec, pointer)
    if "exists" in step:
        ok = present is bool(step["exists"])
        actual: Any = present
        expected: Any = bool(step["exists"])
    elif not present:
        ok = False
        actual = None
        expected = step["equals"]
    else:
        actual = get_property(spec, pointer)
        expected = step["equals"]
        ok = actual == expected
    report = {"kind": kind, "ok": ok, "pointer": pointer, "expected": expected}
    if not ok:
        report["actual"] = actual
        report["error_class"] = "assert_failed"
    return report, None


async def _run(script: SessionScript, app, fail_fast: bool) -> ReplayOutcome:
    transport = httpx.ASGITransport(app=app)
    reports: list = []
    retries: list = []
    latencies: list = []
    failures = 0
    error_classes: dict = {}
    async with httpx.AsyncClient(transport=transport, base_url="http://replay") as client:
        driver = _Driver(client)
        started = time.monotonic()
        await driver.create_session(script.dataset_csv)
        latencies.append((time.monotonic() - started) * 1000.0)
        for index, step in enumerate(script.steps):
            started = time.monotonic()
            report, step_retries = await _run_step(driver, step)
            latencies.append((time.monotonic() - started) * 1000.0)
            report = {"index": index, **report}
            reports.append(report)
            if step_retries is not None:
                retries.append(step_retries)
            if not report["ok"]:
                failures += 1
                error_class = report.get("error_class", "unknown")
                error_classes[error_class] = error_classes.get(error_class, 0) + 1
                if fail_fast:
                    break
    metrics = ReplayMetrics(
        steps_run=len(reports),
        failures=failures,
        mean_retries=(sum(retries) / len(retries)) if retries else 0.0,
        mean_latency_ms=(sum(latencies) / len(latencies)) if latencies else 0.0,
        error_class_counts=error_classes,
    )
    return ReplayOutcome(metrics=metrics, steps=tuple(reports))


def run_script(
    script: SessionScript,
    fixtures_dir: Optional[Path] = None,
    fail_fast: bool = False,
    store: Optional[SessionStore] = None,
    gateway: Optional[LLMGateway] = None,
) -> ReplayOutcome:
    """Replay a script against a fresh in-process service."""
    if gateway is None:
        if fixtures_dir is None:
            raise InvalidRequestError("replay needs a fixtures directory or an explicit gateway")
        gateway = LLMGateway(mode="replay", fixture_dir=Path(fixtures_dir))
    app = create_app(store if store is not None else SessionStore(), gateway)
    return asyncio.run(_run(script, app, fail_fast))
