"""Request bodies for the REST service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict


class CreateSessionRequest(BaseModel):
    """Dataset payload: exactly one of csv text, record list, or a chart
    spec that inlines its data under data.values."""

    model_config = ConfigDict(extra="forbid")

    csv: Optional[str] = None
    records: Optional[list] = None
    spec: Optional[dict] = None


class CommandRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: str


class WidgetResultRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    transforms: list
    chart: dict


class ToggleRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    enabled: bool
