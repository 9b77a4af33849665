"""The REST service over the engine.

One session per imported dataset. Chart and widget commands go through
the synthesis engine; widget results come back through
apply-widget-result after the callback ran elsewhere (browser or
sandbox). Every state change is an event append, every command leaves a
telemetry record, and any error leaves session state exactly as it was.
"""

from __future__ import annotations

import json
import time
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from ..chart.dates import normalize_dates
from ..chart.model import ChartSpec, changed_paths, split_spec
from ..chart.validation import validate_spec
from ..data.summary import enrich, summarize
from ..data.table import DataTable, table_from_csv, table_from_records
from ..errors import (
    DynavisError,
    GatewayError,
    InvalidRequestError,
    InvalidResultError,
    SessionNotFoundError,
    SynthesisError,
    UnknownWidgetError,
)
from ..gateway.client import LLMGateway
from ..analysis.markup import parse_fragment
from ..synthesis.engine import SynthesisOutcome, synthesize_chart, synthesize_widget
from ..widgets.model import effective_spec, record_transforms, remove_widget, toggle_transform
from .models import CommandRequest, CreateSessionRequest, ToggleRequest, WidgetResultRequest
from .sessions import Session, SessionStore, make_event

AUTO_WIDGET_PREFIX = "widget to adjust: "


def _status_for(exc: DynavisError) -> int:
    if isinstance(exc, (SessionNotFoundError, UnknownWidgetError)):
        return 404
    if isinstance(exc, GatewayError):
        return 502
    if isinstance(exc, SynthesisError):
        return 422
    return 400


def _error_body(exc: DynavisError) -> dict:
    body = {"error_kind": exc.error_kind, "message": str(exc)}
    if getattr(exc, "detail_path", None):
        body["detail_path"] = exc.detail_path
    if isinstance(exc, SynthesisError):
        body["transcript"] = [
            {"role": m.role, "content": m.content} for m in exc.transcript
        ]
    return body


def _retries(outcome_transcript: tuple) -> int:
    """Model calls beyond the first; the paper-style retry count."""
    return max(0, sum(1 for m in outcome_transcript if m.role == "assistant") - 1)


def _element_ids(session: Session) -> set:
    ids: set = set()
    for widget in session.registry.widgets:
        ids.update(parse_fragment(widget.markup).ids)
    return ids


def _normalize_transforms(transforms: list) -> list:
    if not transforms:
        return []
    normalized, _ = normalize_dates(ChartSpec({"transform": list(transforms)}))
    return normalized.document.get("transform", [])


def _dataset_from_request(body: CreateSessionRequest) -> tuple[DataTable, Optional[ChartSpec]]:
    given = [name for name in ("csv", "records", "spec") if getattr(body, name) is not None]
    if len(given) != 1:
        raise InvalidRequestError(
            "provide exactly one of csv, records, or spec", detail_path="/"
        )
    if body.csv is not None:
        return table_from_csv(body.csv), None
    if body.records is not None:
        return table_from_records(body.records), None
    chart, dataset, _layout = split_spec(body.spec)
    if dataset is None:
        raise InvalidRequestError(
            "spec import requires inline data.values", detail_path="/data/values"
        )
    report = validate_spec(chart)
    if not report.ok:
        first = report.errors[0]
        raise InvalidResultError(
            f"imported spec is invalid: {first.message}",
            report=report,
            detail_path=first.path,
        )
    return dataset, chart


def create_app(
    store: Optional[SessionStore] = None,
    gateway: Optional[LLMGateway] = None,
) -> FastAPI:
    app = FastAPI(title="dynavis", docs_url=None, redoc_url=None)
    app.state.store = store if store is not None else SessionStore.from_env()
    app.state.gateway = gateway if gateway is not None else LLMGateway.from_env()

    @app.exception_handler(DynavisError)
    async def on_engine_error(request: Request, exc: DynavisError):
        return JSONResponse(_error_body(exc), status_code=_status_for(exc))

    @app.exception_handler(RequestValidationError)
    async def on_request_error(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        message = "invalid request body"
        body = {"error_kind": "bad_request", "message": message}
        if errors:
            first = errors[0]
            loc = [str(part) for part in first.get("loc", ()) if part != "body"]
            body["message"] = f"{'/'.join(loc) or 'body'}: {first.get('msg', message)}"
            if loc:
                body["detail_path"] = "/" + "/".join(loc)
        return JSONResponse(body, status_code=400)

    def _store() -> SessionStore:
        return app.state.store

    def _gateway() -> LLMGateway:
        return app.state.gateway

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/"):
            form = await request.form()
            upload = form.get("file")
            if upload is None:
                raise InvalidRequestError("multipart import needs a 'file' part")
            raw = await upload.read()
            dataset, base_chart = table_from_csv(raw.decode("utf-8")), None
        else:
            try:
                payload = await request.json()
            except (json.JSONDecodeError, UnicodeDecodeError):
                raise InvalidRequestError("request body is not valid JSON")
            body = CreateSessionRequest.model_validate(payload)
            dataset, base_chart = _dataset_from_request(body)
        summary = enrich(summarize(dataset), _gateway())
        session = _store().create(dataset, summary)
        if base_chart is not None:
            _store().append(
                session.id,
                make_event("base_chart_set", {"chart": base_chart.document}),
            )
        return {"session_id": session.id}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        session = _store().get(session_id)
        return {
            "session_id": session.id,
            "summary": session.summary.to_json(),
            "base_chart": None if session.base_chart is None else session.base_chart.document,
            "widgets": [w.to_json() for w in session.registry.newest_first()],
            "dataset": session.dataset.to_json(),
        }

    @app.post("/api/sessions/{session_id}/chart-commands")
    def chart_command(session_id: str, body: CommandRequest):
        store, gateway = _store(), _gateway()
        with store.lock(session_id):
            session = store.get(session_id)
            existing = session.base_chart
            started = time.monotonic()
            try:
                outcome = synthesize_chart(session.summary, body.command, existing, gateway)
            except SynthesisError as exc:
                store.record_telemetry(
                    session_id,
                    "error",
                    {
                        "command": body.command,
                        "stage": "chart",
                        "errors": list(exc.errors),
                    },
                    latency_ms=_elapsed_ms(started),
                    retries=_retries(tuple(exc.transcript)),
                )
                raise
            new_chart: ChartSpec = outcome.result
            # composing with the already-registered widgets must stay valid,
            # otherwise the edit is rejected with the session untouched
            effective = effective_spec(session.registry, new_chart)

            changed = (
                changed_paths(existing.document, new_chart.document)
                if existing is not None
                else []
            )
            auto: Optional[SynthesisOutcome] = None
            if existing is not None and changed:
                derived = AUTO_WIDGET_PREFIX + ", ".join(changed)
                try:
                    auto = synthesize_widget(
                        session.summary, new_chart, derived, _element_ids(session), gateway
                    )
                except (SynthesisError, GatewayError) as exc:
                    store.record_telemetry(
                        session_id,
                        "error",
                        {
                            "command": derived,
                            "stage": "auto_widget",
                            "errors": getattr(exc, "errors", [str(exc)]),
                        },
                        latency_ms=_elapsed_ms(started),
                        retries=0,
                    )

            store.append(
                session_id, make_event("base_chart_set", {"chart": new_chart.document})
            )
            if auto is not None:
                store.append(
                    session_id,
                    make_event("widget_registered", {"widget": auto.result.to_json()}),
                )
                session = store.get(session_id)
                effective = effective_spec(session.registry, new_chart)
            meta = {
                "attempts": outcome.attempts,
                "repair_rounds": outcome.repair_rounds,
                "date_repairs": [r.to_json() for r in outcome.date_repairs],
            }
            if auto is not None:
                meta["auto_widget_meta"] = {
                    "attempts": auto.attempts,
                    "repair_rounds": auto.repair_rounds,
                    "renames": [
                        {"old_id": r.old_id, "new_id": r.new_id} for r in auto.rename_map
                    ],
                }
            store.record_telemetry(
                session_id,
                "nl_edit",
                {"command": body.command, "changed": changed},
                latency_ms=_elapsed_ms(started),
                retries=_retries(outcome.transcript),
            )
            response = {"chart": effective.document, "meta": meta}
            if auto is not None:
                response["auto_widget"] = auto.result.to_json()
            return response

    @app.post("/api/sessions/{session_id}/widget-commands")
    def widget_command(session_id: str, body: CommandRequest):
        store, gateway = _store(), _gateway()
        with store.lock(session_id):
            session = store.get(session_id)
            base = session.require_base()
            started = time.monotonic()
            try:
                outcome = synthesize_widget(
                    session.summary, base, body.command, _element_ids(session), gateway
                )
            except SynthesisError as exc:
                store.record_telemetry(
                    session_id,
                    "error",
                    {
                        "command": body.command,
                        "stage": "widget",
                        "errors": list(exc.errors),
                    },
                    latency_ms=_elapsed_ms(started),
                    retries=_retries(tuple(exc.transcript)),
                )
                raise
            store.append(
                session_id,
                make_event("widget_registered", {"widget": outcome.result.to_json()}),
            )
            store.record_telemetry(
                session_id,
                "nl_widget",
                {
                    "command": body.command,
                    "widget_id": outcome.result.id,
                    "renames": [
                        {"old_id": r.old_id, "new_id": r.new_id} for r in outcome.rename_map
                    ],
                },
                latency_ms=_elapsed_ms(started),
                retries=_retries(outcome.transcript),
            )
            return {"widget": outcome.result.to_json()}

    @app.post("/api/sessions/{session_id}/widgets/{widget_id}/result")
    def widget_result(session_id: str, widget_id: str, body: WidgetResultRequest):
        store = _store()
        with store.lock(session_id):
            session = store.get(session_id)
            session.registry.get(widget_id)
            started = time.monotonic()
            chart, _ = normalize_dates(ChartSpec(body.chart))
            report = validate_spec(chart)
            if not report.ok:
                first = report.errors[0]
                raise InvalidResultError(
                    f"returned chart is invalid: {first.message}",
                    report=report,
                    detail_path=first.path,
                )
            transforms = _normalize_transforms(body.transforms)
            registry = record_transforms(session.registry, widget_id, transforms)
            effective = effective_spec(registry, chart)
            store.append(
                session_id,
                make_event(
                    "transforms_recorded",
                    {
                        "widget_id": widget_id,
                        "transforms": transforms,
                        "chart": chart.document,
                    },
                ),
            )
            store.record_telemetry(
                session_id,
                "widget_interact",
                {"widget_id": widget_id, "transform_count": len(transforms)},
                latency_ms=_elapsed_ms(started),
            )
            return {"effective_spec": effective.document}

    @app.post("/api/sessions/{session_id}/widgets/{widget_id}/toggle")
    def widget_toggle(session_id: str, widget_id: str, body: ToggleRequest):
        store = _store()
        with store.lock(session_id):
            session = store.get(session_id)
            started = time.monotonic()
            registry = toggle_transform(session.registry, widget_id, body.enabled)
            effective = effective_spec(registry, session.require_base())
            store.append(
                session_id,
                make_event("toggle", {"widget_id": widget_id, "enabled": body.enabled}),
            )
            store.record_telemetry(
                session_id,
                "toggle",
                {"widget_id": widget_id, "enabled": body.enabled},
                latency_ms=_elapsed_ms(started),
            )
            return {"effective_spec": effective.document}

    @app.delete("/api/sessions/{session_id}/widgets/{widget_id}")
    def widget_delete(session_id: str, widget_id: str):
        store = _store()
        with store.lock(session_id):
            session = store.get(session_id)
            session.registry.get(widget_id)
            registry = remove_widget(session.registry, widget_id)
            effective = effective_spec(registry, session.require_base())
            store.append(session_id, make_event("widget_deleted", {"widget_id": widget_id}))
            return {"effective_spec": effective.document}

    @app.get("/api/sessions/{session_id}/effective-spec")
    def get_effective(session_id: str):
        session = _store().get(session_id)
        return {"spec": session.effective().document}

    @app.get("/api/sessions/{session_id}/telemetry")
    def get_telemetry(session_id: str):
        events = _store().telemetry(session_id)
        content = "".join(json.dumps(e, sort_keys=True) + "\n" for e in events)
        return Response(content=content, media_type="application/x-ndjson")

    return app


def _elapsed_ms(started: float) -> int:
    return int((time.monotonic() - started) * 1000)
