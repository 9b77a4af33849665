"""Dynamic widget model and registry.

A widget is a synthesized UI component: an HTML fragment plus a callback
script with the shape callback(event, chart) -> [transforms, chart].
The registry orders widgets by creation sequence, remembers each
transform widget's latest transforms, and computes the effective chart
spec: base transforms first, then every enabled widget's latest
transforms in ascending creation order.

The registry is a value type; every operation returns a new registry.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from typing import Optional

from ..chart.dates import normalize_dates
from ..chart.model import ChartSpec
from ..chart.validation import validate_spec, validate_transform_entry
from ..errors import (
    DuplicateWidgetError,
    EffectiveSpecError,
    InvalidResultError,
    NotTransformWidgetError,
    UnknownWidgetError,
)


@dataclass(frozen=True)
class Widget:
    id: str
    title: str
    markup: str
    callback_source: str
    is_transform_widget: bool
    enabled: bool = True
    seq: int = 0

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "markup": self.markup,
            "callback_source": self.callback_source,
            "is_transform_widget": self.is_transform_widget,
            "enabled": self.enabled,
            "seq": self.seq,
        }

    @staticmethod
    def from_json(payload: dict) -> "Widget":
        return Widget(
            id=payload["id"],
            title=payload["title"],
            markup=payload["markup"],
            callback_source=payload["callback_source"],
            is_transform_widget=payload["is_transform_widget"],
            enabled=payload["enabled"],
            seq=payload["seq"],
        )


@dataclass(frozen=True)
class WidgetRegistry:
    widgets: tuple[Widget, ...] = ()
    latest_transforms: dict = field(default_factory=dict)
    next_seq: int = 1

    def get(self, widget_id: str) -> Widget:
        for w in self.widgets:
            if w.id == widget_id:
                return w
        raise UnknownWidgetError(f"no widget with id {widget_id!r}")

    def has(self, widget_id: str) -> bool:
        return any(w.id == widget_id for w in self.widgets)

    def in_creation_order(self) -> list[Widget]:
        return sorted(self.widgets, key=lambda w: w.seq)

    def newest_first(self) -> list[Widget]:
        return sorted(self.widgets, key=lambda w: w.seq, reverse=True)

    def to_json(self) -> dict:
        return {
            "widgets": [w.to_json() for w in self.in_creation_order()],
            "latest_transforms": copy.deepcopy(self.latest_transforms),
            "next_seq": self.next_seq,
        }

    @staticmethod
    def from_json(payload: dict) -> "WidgetRegistry":
        return WidgetRegistry(
            widgets=tuple(Widget.from_json(w) for w in payload["widgets"]),
            latest_transforms=copy.deepcopy(payload["latest_transforms"]),
            next_seq=payload.get("next_seq", 1),
        )


def register_widget(reg: WidgetRegistry, widget: Widget) -> WidgetRegistry:
    """Append a widget with the next sequence number, enabled."""
    if reg.has(widget.id):
        raise DuplicateWidgetError(
            f"widget id {widget.id!r} already registered (deconfliction bug)"
        )
    stamped = replace(widget, seq=reg.next_seq, enabled=True)
    return WidgetRegistry(
        reg.widgets + (stamped,), dict(reg.latest_transforms), reg.next_seq + 1
    )


def remove_widget(reg: WidgetRegistry, widget_id: str) -> WidgetRegistry:
    reg.get(widget_id)
    widgets = tuple(w for w in reg.widgets if w.id != widget_id)
    transforms = {k: v for k, v in reg.latest_transforms.items() if k != widget_id}
    return WidgetRegistry(widgets, transforms, reg.next_seq)


def validate_transforms(transforms: list) -> None:
    """Each entry must be a valid grammar transform object."""
    if not isinstance(transforms, list):
        raise InvalidResultError("transforms is not a list")
    for i, entry in enumerate(transforms):
        report = validate_transform_entry(entry)
        if not report.ok:
            first = report.errors[0]
            raise InvalidResultError(
                f"transform {i} is invalid: {first.message}",
                report=report,
                detail_path=f"/transforms/{i}{first.path}",
            )


def record_transforms(
    reg: WidgetRegistry, widget_id: str, transforms: list
) -> WidgetRegistry:
    """Replace (never append to) a widget's latest transforms."""
    widget = reg.get(widget_id)
    if transforms and not widget.is_transform_widget:
        raise NotTransformWidgetError(
            f"widget {widget_id!r} is not a transform widget but produced transforms"
        )
    validate_transforms(transforms)
    updated = dict(reg.latest_transforms)
    updated[widget_id] = copy.deepcopy(transforms)
    return WidgetRegistry(reg.widgets, updated, reg.next_seq)


def toggle_transform(
    reg: WidgetRegistry, widget_id: str, enabled: bool
) -> WidgetRegistry:
    widget = reg.get(widget_id)
    if not widget.is_transform_widget:
        raise NotTransformWidgetError(
            f"widget {widget_id!r} has no transform toggle"
        )
    widgets = tuple(
        replace(w, enabled=enabled) if w.id == widget_id else w for w in reg.widgets
    )
    return WidgetRegistry(widgets, dict(reg.latest_transforms), reg.next_seq)


def effective_spec(reg: WidgetRegistry, base: ChartSpec) -> ChartSpec:
    """Base spec plus enabled widgets' latest transforms, date-normalized.

    Base transforms come first; widget transforms follow in ascending
    creation order, each widget's list kept in order. The result must
    validate, otherwise the composition fails with the report attached.
    """
    doc = copy.deepcopy(base.document)
    combined = list(doc.get("transform") or [])
    for widget in reg.in_creation_order():
        if not widget.is_transform_widget or not widget.enabled:
            continue
        combined.extend(copy.deepcopy(reg.latest_transforms.get(widget.id, [])))
    if combined:
        doc["transform"] = combined
    else:
        doc.pop("transform", None)
    result, _repairs = normalize_dates(ChartSpec(doc))
    report = validate_spec(result)
    if not report.ok:
        first = report.errors[0]
        raise EffectiveSpecError(
            f"effective spec is invalid: {first.message}",
            report=report,
            detail_path=first.path,
        )
    return result
