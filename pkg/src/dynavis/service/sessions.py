"""Event-sourced session state.

Every state change is an appended event; the in-memory session is just a
fold over its log. Replaying a log from scratch must reproduce the exact
same base chart, registry, and effective spec, which is what makes crash
recovery and the headless replay harness trustworthy. Telemetry is kept
separately: it observes the session but never feeds back into state.
"""

from __future__ import annotations

import dataclasses
import datetime as _dt
import json
import os
import threading
import uuid
from pathlib import Path
from typing import Optional

from ..chart.model import ChartSpec
from ..data.summary import DataSummary
from ..data.table import DataTable
from ..errors import NoBaseChartError, SessionNotFoundError
from ..widgets.model import (
    Widget,
    WidgetRegistry,
    effective_spec,
    record_transforms,
    register_widget,
    remove_widget,
    toggle_transform,
)

EVENT_KINDS = (
    "session_created",
    "base_chart_set",
    "widget_registered",
    "transforms_recorded",
    "toggle",
    "widget_deleted",
)

TELEMETRY_KINDS = ("nl_edit", "nl_widget", "widget_interact", "toggle", "error")

SNAPSHOT_EVERY = 20


@dataclasses.dataclass
class Session:
    id: str
    dataset: DataTable
    summary: DataSummary
    base_chart: Optional[ChartSpec] = None
    registry: WidgetRegistry = dataclasses.field(default_factory=WidgetRegistry)

    def require_base(self) -> ChartSpec:
        if self.base_chart is None:
            raise NoBaseChartError(
                f"session {self.id!r} has no base chart yet; create one first"
            )
        return self.base_chart

    def effective(self) -> ChartSpec:
        return effective_spec(self.registry, self.require_base())


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def make_event(kind: str, payload: dict) -> dict:
    if kind not in EVENT_KINDS:
        raise ValueError(f"unknown event kind: {kind!r}")
    return {"kind": kind, "at": _now(), **payload}


def apply_event(session: Optional[Session], event: dict) -> Session:
    """Fold one event into the session state. Pure in everything but the
    returned object; timestamps are ignored."""
    kind = event["kind"]
    if kind == "session_created":
        return Session(
            id=event["session_id"],
            dataset=DataTable.from_json(event["dataset"]),
            summary=DataSummary.from_json(event["summary"]),
        )
    if session is None:
        raise ValueError(f"event {kind!r} before session_created")
    if kind == "base_chart_set":
        session.base_chart = ChartSpec(event["chart"])
    elif kind == "widget_registered":
        widget = Widget.from_json(event["widget"])
        session.registry = register_widget(session.registry, widget)
    elif kind == "transforms_recorded":
        session.base_chart = ChartSpec(event["chart"])
        session.registry = record_transforms(
            session.registry, event["widget_id"], event["transforms"]
        )
    elif kind == "toggle":
        session.registry = toggle_transform(
            session.registry, event["widget_id"], event["enabled"]
        )
    elif kind == "widget_deleted":
        session.registry = remove_widget(session.registry, event["widget_id"])
    else:
        raise ValueError(f"unknown event kind: {kind!r}")
    return session


def rebuild_session(events: list) -> Session:
    session: Optional[Session] = None
    for event in events:
        session = apply_event(session, event)
    if session is None:
        raise ValueError("empty event log")
    return session


def state_bytes(session: Session) -> bytes:
    """Canonical byte rendering of the replayable state, for round-trip
    comparisons."""
    state = {
        "base_chart": None if session.base_chart is None else session.base_chart.document,
        "registry": session.registry.to_json(),
    }
    return json.dumps(state, sort_keys=True, separators=(",", ":")).encode("utf-8")


class SessionStore:
    """In-memory sessions backed by optional on-disk event logs.

    With a state directory configured, every event lands in
    ``<dir>/<session_id>.events.jsonl`` as it happens and a state snapshot
    is refreshed every ``SNAPSHOT_EVERY`` events. Recovery ignores the
    snapshot and replays the log, so the snapshot can never poison state.
    """

    def __init__(self, state_dir: Optional[Path] = None):
        self.state_dir = Path(state_dir) if state_dir else None
        if self.state_dir:
            self.state_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict = {}
        self._events: dict = {}
        self._telemetry: dict = {}
        self._locks: dict = {}
        self._registry_lock = threading.Lock()

    @classmethod
    def from_env(cls) -> "SessionStore":
        state_dir = os.environ.get("DYNAVIS_STATE_DIR")
        return cls(Path(state_dir) if state_dir else None)

    def lock(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    # ---- event log ----

    def _log_path(self, session_id: str) -> Optional[Path]:
        if self.state_dir is None:
            return None
        return self.state_dir / f"{session_id}.events.jsonl"

    def _persist(self, session_id: str, event: dict) -> None:
        path = self._log_path(session_id)
        if path is None:
            return
        with path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, sort_keys=True) + "\n")
        if len(self._events[session_id]) % SNAPSHOT_EVERY == 0:
            snapshot = {
                "event_count": len(self._events[session_id]),
                "state": json.loads(state_bytes(self._sessions[session_id])),
            }
            snap_path = self.state_dir / f"{session_id}.snapshot.json"
            snap_path.write_text(json.dumps(snapshot, sort_keys=True), encoding="utf-8")

    def append(self, session_id: str, event: dict) -> Session:
        session = self._sessions.get(session_id)
        updated = apply_event(session, event)
        self._sessions[session_id] = updated
        self._events.setdefault(session_id, []).append(event)
        self._persist(session_id, event)
        return updated

    def events(self, session_id: str) -> list:
        self.get(session_id)
        return list(self._events[session_id])

    # ---- sessions ----

    def create(self, dataset: DataTable, summary: DataSummary) -> Session:
        session_id = uuid.uuid4().hex
        event = make_event(
            "session_created",
            {
                "session_id": session_id,
                "dataset": dataset.to_json(),
                "summary": summary.to_json(),
            },
        )
        return self.append(session_id, event)

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is not None:
            return session
        recovered = self._recover(session_id)
        if recovered is not None:
            return recovered
        raise SessionNotFoundError(f"no session {session_id!r}")

    def _recover(self, session_id: str) -> Optional[Session]:
        path = self._log_path(session_id)
        if path is None or not path.exists():
            return None
        events = [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        if not events:
            return None
        session = rebuild_session(events)
        self._sessions[session_id] = session
        self._events[session_id] = events
        self._telemetry.setdefault(session_id, self._load_telemetry(session_id))
        return session

    # ---- telemetry ----

    def _telemetry_path(self, session_id: str) -> Optional[Path]:
        if self.state_dir is None:
            return None
        return self.state_dir / f"{session_id}.telemetry.jsonl"

    def _load_telemetry(self, session_id: str) -> list:
        path = self._telemetry_path(session_id)
        if path is None or not path.exists():
            return []
        return [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def record_telemetry(
        self,
        session_id: str,
        kind: str,
        payload: dict,
        latency_ms: int,
        retries: int = 0,
    ) -> dict:
        if kind not in TELEMETRY_KINDS:
            raise ValueError(f"unknown telemetry kind: {kind!r}")
        event = {
            "at": _now(),
            "kind": kind,
            "payload": payload,
            "latency_ms": max(0, int(latency_ms)),
            "retries": int(retries),
        }
        self._telemetry.setdefault(session_id, []).append(event)
        path = self._telemetry_path(session_id)
        if path is not None:
            with path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps(event, sort_keys=True) + "\n")
        return event

    def telemetry(self, session_id: str) -> list:
        self.get(session_id)
        return list(self._telemetry.get(session_id, []))
