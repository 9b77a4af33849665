"""REST service behavior over the ASGI transport with a scripted gateway."""

import asyncio
import json

import httpx
import pytest

from dynavis.errors import ReplayMissError
from dynavis.service.app import create_app
from dynavis.service.sessions import SessionStore, rebuild_session, state_bytes

from .support import CARS_CSV, POINT_SPEC, ScriptedLLM, dual_block, json_block

ENRICH_REPLY = """```json
{"dataset_description": "fuel economy measurements for cars", "columns": [
  {"name": "mpg", "semantic_description": "fuel economy", "semantic_type": "miles per gallon"},
  {"name": "horsepower", "semantic_description": "engine power", "semantic_type": "power"},
  {"name": "origin", "semantic_description": "manufacturing region", "semantic_type": "region"},
  {"name": "year", "semantic_description": "model year", "semantic_type": "date"}]}
```"""

EDITED_SPEC = json.loads(json.dumps(POINT_SPEC))
EDITED_SPEC["encoding"]["x"]["axis"] = {"labelAngle": -45}

AUTO_WIDGET_REPLY = dual_block(
    """<div id="axis-angle" data-title="Axis label angle">
  <label for="axis-angle-input">Label angle</label>
  <input id="axis-angle-input" type="range" min="-90" max="90" value="-45">
</div>""",
    """function callback(event, chart) {
  let transforms = [];
  if (!chart.encoding) { chart.encoding = {}; }
  if (!chart.encoding.x) { chart.encoding.x = {}; }
  if (!chart.encoding.x.axis) { chart.encoding.x.axis = {}; }
  chart.encoding.x.axis.labelAngle = Number(event.target.value);
  return [transforms, chart];
}""",
)

FILTER_WIDGET_REPLY = dual_block(
    """<div id="mpg-filter" data-title="Minimum MPG">
  <label for="mpg-min">Min MPG</label>
  <input id="mpg-min" type="range" min="10" max="40" value="20">
</div>""",
    """function callback(event, chart) {
  let transforms = [];
  transforms.push({"filter": "datum.mpg >= " + event.target.value});
  return [transforms, chart];
}""",
)


def run(coro):
    return asyncio.run(coro)


class Service:
    """One app instance plus its scripted gateway and raw store."""

    def __init__(self, replies):
        self.store = SessionStore()
        self.llm = ScriptedLLM(replies)
        self.app = create_app(self.store, self.llm)

    def client(self):
        transport = httpx.ASGITransport(app=self.app)
        return httpx.AsyncClient(transport=transport, base_url="http://test")


async def create_session(client, **payload):
    if not payload:
        payload = {"csv": CARS_CSV}
    r = await client.post("/api/sessions", json=payload)
    assert r.status_code == 201, r.text
    return r.json()["session_id"]


async def full_session(client):
    """Session with a base chart, an auto widget, and a filter widget."""
    sid = await create_session(client)
    r = await client.post(
        f"/api/sessions/{sid}/chart-commands",
        json={"command": "plot mpg against horsepower"},
    )
    assert r.status_code == 200, r.text
    r = await client.post(
        f"/api/sessions/{sid}/chart-commands", json={"command": "rotate the x labels"}
    )
    assert r.status_code == 200, r.text
    r = await client.post(
        f"/api/sessions/{sid}/widget-commands",
        json={"command": "slider to filter by minimum mpg"},
    )
    assert r.status_code == 200, r.text
    return sid


def full_replies():
    return [
        ENRICH_REPLY,
        json_block(POINT_SPEC),
        json_block(EDITED_SPEC),
        AUTO_WIDGET_REPLY,
        FILTER_WIDGET_REPLY,
    ]


class TestSessionCreation:
    def test_create_from_csv_enriches_and_snapshots(self):
        service = Service([ENRICH_REPLY])

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                r = await client.get(f"/api/sessions/{sid}")
                assert r.status_code == 200
                body = r.json()
                assert (
                    body["summary"]["dataset_description"]
                    == "fuel economy measurements for cars"
                )
                assert body["base_chart"] is None
                assert body["widgets"] == []
                assert body["dataset"]["columns"][0]["name"] == "mpg"

        run(flow())

    def test_create_from_records(self):
        service = Service([ENRICH_REPLY])

        async def flow():
            async with service.client() as client:
                sid = await create_session(
                    client, records=[{"a": 1, "b": "x"}, {"a": 2, "b": "y"}]
                )
                r = await client.get(f"/api/sessions/{sid}")
                assert [c["name"] for c in r.json()["dataset"]["columns"]] == [
                    "a",
                    "b",
                ]

        run(flow())

    def test_create_from_spec_splits_inline_values(self):
        service = Service([ENRICH_REPLY])
        full = {
            "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
            "data": {"values": [{"a": 1, "b": 2}, {"a": 3, "b": 4}]},
            "mark": "bar",
            "encoding": {
                "x": {"field": "a", "type": "ordinal"},
                "y": {"field": "b", "type": "quantitative"},
            },
        }

        async def flow():
            async with service.client() as client:
                sid = await create_session(client, spec=full)
                r = await client.get(f"/api/sessions/{sid}")
                base = r.json()["base_chart"]
                assert base is not None
                assert base["data"] == {"name": "table"}
                r = await client.get(f"/api/sessions/{sid}/effective-spec")
                assert r.status_code == 200

        run(flow())

    def test_multipart_csv_upload(self):
        service = Service([ENRICH_REPLY])

        async def flow():
            async with service.client() as client:
                r = await client.post(
                    "/api/sessions",
                    files={"file": ("cars.csv", CARS_CSV, "text/csv")},
                )
                assert r.status_code == 201, r.text

        run(flow())

    def test_two_sources_at_once_rejected(self):
        service = Service([])

        async def flow():
            async with service.client() as client:
                r = await client.post(
                    "/api/sessions", json={"csv": "a\n1", "records": [{"a": 1}]}
                )
                assert r.status_code == 400
                assert r.json()["error_kind"] == "bad_request"

        run(flow())

    def test_enrichment_failure_still_creates_the_session(self):
        service = Service(["garbage", "garbage again"])

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                r = await client.get(f"/api/sessions/{sid}")
                summary = r.json()["summary"]
                assert summary["dataset_description"] == ""
                assert summary["enrich_warning"] is True

        run(flow())


class TestChartCommands:
    def test_creation_then_edit_with_auto_widget(self):
        service = Service(full_replies())

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                r = await client.post(
                    f"/api/sessions/{sid}/chart-commands",
                    json={"command": "plot mpg against horsepower"},
                )
                body = r.json()
                assert body["chart"]["mark"] == "point"
                assert "auto_widget" not in body
                assert body["meta"]["attempts"] == 1
                assert body["meta"]["repair_rounds"] == 0

                r = await client.post(
                    f"/api/sessions/{sid}/chart-commands",
                    json={"command": "rotate the x labels"},
                )
                body = r.json()
                assert (
                    body["chart"]["encoding"]["x"]["axis"]["labelAngle"] == -45
                )
                assert body["auto_widget"]["id"] == "axis-angle"
                assert "auto_widget_meta" in body["meta"]
                # the derived command names what the edit changed
                auto_cmd = service.llm.calls[3].messages[-1].content
                assert auto_cmd.startswith("widget to adjust: ")
                assert "/encoding/x/axis" in auto_cmd

        run(flow())

    def test_auto_widget_failure_is_swallowed(self):
        service = Service(
            [
                ENRICH_REPLY,
                json_block(POINT_SPEC),
                json_block(EDITED_SPEC),
                "junk",
                "junk",
                "junk",
                "junk",
            ]
        )

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                await client.post(
                    f"/api/sessions/{sid}/chart-commands",
                    json={"command": "plot mpg against horsepower"},
                )
                r = await client.post(
                    f"/api/sessions/{sid}/chart-commands",
                    json={"command": "rotate the x labels"},
                )
                assert r.status_code == 200
                body = r.json()
                assert "auto_widget" not in body
                assert (
                    body["chart"]["encoding"]["x"]["axis"]["labelAngle"] == -45
                )
                r = await client.get(f"/api/sessions/{sid}/telemetry")
                kinds = [
                    json.loads(line)["kind"] for line in r.text.strip().splitlines()
                ]
                assert "error" in kinds

        run(flow())

    def test_budget_exhaustion_returns_422_and_leaves_state_alone(self):
        service = Service([ENRICH_REPLY] + ["junk"] * 4)

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                before = len(service.store.events(sid))
                r = await client.post(
                    f"/api/sessions/{sid}/chart-commands",
                    json={"command": "do something impossible"},
                )
                assert r.status_code == 422
                body = r.json()
                assert body["error_kind"] == "synthesis"
                assert len(body["transcript"]) >= 4
                assert service.llm.replies == []
                assert len(service.store.events(sid)) == before

        run(flow())

    def test_replay_miss_maps_to_502(self):
        service = Service(
            [ENRICH_REPLY, ReplayMissError("no fixture recorded", "deadbeef")]
        )

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                r = await client.post(
                    f"/api/sessions/{sid}/chart-commands", json={"command": "edit"}
                )
                assert r.status_code == 502
                assert r.json()["error_kind"] == "replay_miss"

        run(flow())

    def test_malformed_body_is_a_bad_request(self):
        service = Service([ENRICH_REPLY])

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                r = await client.post(
                    f"/api/sessions/{sid}/chart-commands", json={"nope": 1}
                )
                assert r.status_code == 400
                assert r.json()["error_kind"] == "bad_request"

        run(flow())


class TestWidgetRoutes:
    def test_widget_command_registers_newest_first(self):
        service = Service(full_replies())

        async def flow():
            async with service.client() as client:
                sid = await full_session(client)
                r = await client.get(f"/api/sessions/{sid}")
                widgets = r.json()["widgets"]
                assert [w["id"] for w in widgets] == ["mpg-filter", "axis-angle"]
                assert widgets[0]["is_transform_widget"] is True

        run(flow())

    def test_widget_result_applies_and_normalizes_dates(self):
        service = Service(full_replies())

        async def flow():
            async with service.client() as client:
                sid = await full_session(client)
                r = await client.get(f"/api/sessions/{sid}")
                base_chart = r.json()["base_chart"]
                transforms = [
                    {"filter": "datum.mpg >= 22"},
                    {
                        "filter": {
                            "field": "year",
                            "range": ["1971-01-01", "1973-01-01"],
                        }
                    },
                ]
                r = await client.post(
                    f"/api/sessions/{sid}/widgets/mpg-filter/result",
                    json={"transforms": transforms, "chart": base_chart},
                )
                assert r.status_code == 200, r.text
                eff = r.json()["effective_spec"]
                assert {"filter": "datum.mpg >= 22"} in eff["transform"]
                ranged = [
                    t
                    for t in eff["transform"]
                    if isinstance(t.get("filter"), dict) and "range" in t["filter"]
                ]
                assert ranged[0]["filter"]["range"][0] == {
                    "year": 1971,
                    "month": 1,
                    "date": 1,
                }

        run(flow())

    def test_toggle_round_trip(self):
        service = Service(full_replies())

        async def flow():
            async with service.client() as client:
                sid = await full_session(client)
                r = await client.get(f"/api/sessions/{sid}")
                base_chart = r.json()["base_chart"]
                await client.post(
                    f"/api/sessions/{sid}/widgets/mpg-filter/result",
                    json={
                        "transforms": [{"filter": "datum.mpg >= 22"}],
                        "chart": base_chart,
                    },
                )
                r = await client.post(
                    f"/api/sessions/{sid}/widgets/mpg-filter/toggle",
                    json={"enabled": False},
                )
                assert r.status_code == 200
                assert "transform" not in r.json()["effective_spec"]
                r = await client.post(
                    f"/api/sessions/{sid}/widgets/mpg-filter/toggle",
                    json={"enabled": True},
                )
                assert r.json()["effective_spec"]["transform"] == [
                    {"filter": "datum.mpg >= 22"}
                ]

        run(flow())

    def test_invalid_result_rejected_atomically(self):
        service = Service(full_replies())

        async def flow():
            async with service.client() as client:
                sid = await full_session(client)
                r = await client.get(f"/api/sessions/{sid}")
                base_chart = r.json()["base_chart"]
                await client.post(
                    f"/api/sessions/{sid}/widgets/mpg-filter/result",
                    json={
                        "transforms": [{"filter": "datum.mpg >= 22"}],
                        "chart": base_chart,
                    },
                )
                bad_chart = json.loads(json.dumps(base_chart))
                bad_chart["mark"] = 12345
                r = await client.post(
                    f"/api/sessions/{sid}/widgets/mpg-filter/result",
                    json={"transforms": [], "chart": bad_chart},
                )
                assert r.status_code == 400
                assert r.json()["error_kind"] == "invalid_result"
                assert r.json()["detail_path"].startswith("/")
                # the rejected write left the effective spec alone
                r = await client.get(f"/api/sessions/{sid}/effective-spec")
                assert r.json()["spec"]["transform"] == [
                    {"filter": "datum.mpg >= 22"}
                ]

        run(flow())

    def test_delete_widget(self):
        service = Service(full_replies())

        async def flow():
            async with service.client() as client:
                sid = await full_session(client)
                r = await client.request(
                    "DELETE", f"/api/sessions/{sid}/widgets/axis-angle"
                )
                assert r.status_code == 200
                r = await client.get(f"/api/sessions/{sid}")
                assert [w["id"] for w in r.json()["widgets"]] == ["mpg-filter"]

        run(flow())

    def test_unknown_ids_map_to_404(self):
        service = Service([ENRICH_REPLY])

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                r = await client.post(
                    f"/api/sessions/{sid}/widgets/nope/toggle",
                    json={"enabled": True},
                )
                assert r.status_code == 404
                r = await client.get("/api/sessions/doesnotexist")
                assert r.status_code == 404
                assert r.json()["error_kind"] == "session_not_found"

        run(flow())

    def test_effective_spec_needs_a_base_chart(self):
        service = Service([ENRICH_REPLY])

        async def flow():
            async with service.client() as client:
                sid = await create_session(client)
                r = await client.get(f"/api/sessions/{sid}/effective-spec")
                assert r.status_code == 400
                assert r.json()["error_kind"] == "no_base_chart"

        run(flow())


class TestObservability:
    def test_telemetry_stream_and_event_sourcing(self):
        service = Service(full_replies())

        async def flow():
            async with service.client() as client:
                sid = await full_session(client)
                r = await client.get(f"/api/sessions/{sid}")
                base_chart = r.json()["base_chart"]
                await client.post(
                    f"/api/sessions/{sid}/widgets/mpg-filter/result",
                    json={
                        "transforms": [{"filter": "datum.mpg >= 22"}],
                        "chart": base_chart,
                    },
                )
                await client.post(
                    f"/api/sessions/{sid}/widgets/mpg-filter/toggle",
                    json={"enabled": False},
                )
                service.llm.replies = ["junk"] * 4
                r = await client.post(
                    f"/api/sessions/{sid}/chart-commands",
                    json={"command": "do something impossible"},
                )
                assert r.status_code == 422

                r = await client.get(f"/api/sessions/{sid}/telemetry")
                assert r.status_code == 200
                assert r.headers["content-type"].startswith("application/x-ndjson")
                lines = [json.loads(line) for line in r.text.strip().splitlines()]
                kinds = {ln["kind"] for ln in lines}
                assert {
                    "nl_edit",
                    "nl_widget",
                    "widget_interact",
                    "toggle",
                    "error",
                }.issubset(kinds)
                assert all(isinstance(ln["latency_ms"], int) for ln in lines)

            rebuilt = rebuild_session(service.store.events(sid))
            assert state_bytes(rebuilt) == state_bytes(service.store.get(sid))

        run(flow())
