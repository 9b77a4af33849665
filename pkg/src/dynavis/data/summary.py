"""Dataset summarization for LLM grounding.

Two stages. `summarize` computes exact per-column statistics (min/max
for numeric and date columns, unique and null counts, a seeded uniform
sample of distinct values). `enrich` asks the gateway for a dataset
description and per-column semantic descriptions/types; statistics are
never touched, and after the call budget (one retry) is exhausted the
rule-based summary comes back unchanged with a warning flag.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from typing import Any, Optional

from ..errors import CodeBlockMissingError, DatasetError, GatewayError
from ..gateway.client import Conversation, LLMGateway, Message
from .table import DataTable

DEFAULT_N_SAMPLES = 5
DEFAULT_SEED = 0

# columns of these types carry min/max
_ORDERED_TYPES = ("integer", "number", "date")


@dataclass(frozen=True)
class ColumnStats:
    name: str
    atomic_type: str
    min: Optional[Any]
    max: Optional[Any]
    unique_count: int
    null_count: int
    samples: tuple

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "atomic_type": self.atomic_type,
            "min": self.min,
            "max": self.max,
            "unique_count": self.unique_count,
            "null_count": self.null_count,
            "samples": list(self.samples),
        }

    @staticmethod
    def from_json(payload: dict) -> "ColumnStats":
        return ColumnStats(
            name=payload["name"],
            atomic_type=payload["atomic_type"],
            min=payload["min"],
            max=payload["max"],
            unique_count=payload["unique_count"],
            null_count=payload["null_count"],
            samples=tuple(payload["samples"]),
        )


@dataclass(frozen=True)
class ColumnSummary:
    stats: ColumnStats
    semantic_description: str = ""
    semantic_type: str = ""

    def to_json(self) -> dict:
        return {
            "stats": self.stats.to_json(),
            "semantic_description": self.semantic_description,
            "semantic_type": self.semantic_type,
        }

    @staticmethod
    def from_json(payload: dict) -> "ColumnSummary":
        return ColumnSummary(
            stats=ColumnStats.from_json(payload["stats"]),
            semantic_description=payload["semantic_description"],
            semantic_type=payload["semantic_type"],
        )


@dataclass(frozen=True)
class DataSummary:
    dataset_description: str
    columns: tuple[ColumnSummary, ...]
    enrich_warning: bool = False

    def to_json(self) -> dict:
        return {
            "dataset_description": self.dataset_description,
            "columns": [c.to_json() for c in self.columns],
            "enrich_warning": self.enrich_warning,
        }

    @staticmethod
    def from_json(payload: dict) -> "DataSummary":
        return DataSummary(
            dataset_description=payload["dataset_description"],
            columns=tuple(ColumnSummary.from_json(c) for c in payload["columns"]),
            enrich_warning=payload.get("enrich_warning", False),
        )


def _distinct_in_order(values: list) -> list:
    seen = set()
    out = []
    for v in values:
        if v is None or v in seen:
            continue
        seen.add(v)
        out.append(v)
    return out


def summarize(
    dataset: DataTable,
    n_samples: int = DEFAULT_N_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> DataSummary:
    """Exact per-column statistics plus a seeded value sample.

    Samples are drawn uniformly without replacement from the column's
    distinct non-null values (all of them when there are at most
    n_samples); one RNG seeded once covers the columns in order, so a
    fixed seed makes the whole summary reproducible.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not dataset.columns:
        raise DatasetError("dataset has no columns")
    rng = random.Random(seed)
    columns = []
    for idx, column in enumerate(dataset.columns):
        values = [row[idx] for row in dataset.rows]
        non_null = [v for v in values if v is not None]
        distinct = _distinct_in_order(values)
        if column.atomic_type in _ORDERED_TYPES and non_null:
            lo, hi = min(non_null), max(non_null)
        else:
            lo = hi = None
        if len(distinct) <= n_samples:
            samples = tuple(distinct)
        else:
            samples = tuple(rng.sample(distinct, n_samples))
        columns.append(
            ColumnSummary(
                stats=ColumnStats(
                    name=column.name,
                    atomic_type=column.atomic_type,
                    min=lo,
                    max=hi,
                    unique_count=len(distinct),
                    null_count=len(values) - len(non_null),
                    samples=samples,
                )
            )
        )
    return DataSummary(dataset_description="", columns=tuple(columns))


def render_summary(summary: DataSummary) -> str:
    """Compact text rendering used as prompt grounding."""
    lines = []
    if summary.dataset_description:
        lines.append(f"dataset: {summary.dataset_description}")
    for col in summary.columns:
        s = col.stats
        parts = [f"type={s.atomic_type}"]
        if s.min is not None:
            parts.append(f"min={s.min}")
        if s.max is not None:
            parts.append(f"max={s.max}")
        parts.append(f"unique={s.unique_count}")
        parts.append(f"nulls={s.null_count}")
        parts.append("samples=" + json.dumps(list(s.samples), ensure_ascii=True))
        if col.semantic_type:
            parts.append(f"semantic={col.semantic_type}")
        line = f"- {s.name}: " + ", ".join(parts)
        if col.semantic_description:
            line += f" ({col.semantic_description})"
        lines.append(line)
    return "\n".join(lines)


_ENRICH_SYSTEM = """You are a data analyst. Given per-column statistics of a dataset, \
describe what the dataset is about and what each column means.

Respond with exactly one fenced code block tagged json containing:
{"dataset_description": "...", "columns": [{"name": "...", "semantic_description": "...", "semantic_type": "..."}]}

Cover every column, in the given order. semantic_type is a short tag \
such as "company ticker" or "price"."""


def _extract_json_block(text: str) -> Any:
    from ..synthesis.blocks import extract_code_block

    return json.loads(extract_code_block(text, "json"))


def _apply_enrichment(summary: DataSummary, payload: Any) -> DataSummary:
    if not isinstance(payload, dict):
        raise ValueError("enrichment payload is not an object")
    description = payload.get("dataset_description")
    if not isinstance(description, str):
        raise ValueError("dataset_description missing or not a string")
    by_name = {}
    for entry in payload.get("columns", []):
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise ValueError("bad column entry in enrichment payload")
        by_name[entry["name"]] = entry
    columns = []
    for col in summary.columns:
        entry = by_name.get(col.stats.name, {})
        columns.append(
            ColumnSummary(
                stats=col.stats,
                semantic_description=str(entry.get("semantic_description", "")),
                semantic_type=str(entry.get("semantic_type", "")),
            )
        )
    return DataSummary(description, tuple(columns), enrich_warning=False)


def enrich(summary: DataSummary, llm: LLMGateway) -> DataSummary:
    """Fill semantic fields via the gateway; fall back unchanged on failure.

    Budget: one call plus one in-conversation retry. Gateway errors
    (including replay misses) and malformed responses both consume the
    budget; exhausting it returns the input with enrich_warning set.
    """
    conv = Conversation(
        (
            Message("system", _ENRICH_SYSTEM),
            Message("user", render_summary(summary)),
        )
    )
    for round_no in range(2):
        try:
            content = llm.complete(conv)
        except GatewayError:
            # transient in live mode; deterministic miss in replay. Retry
            # the identical conversation once, then fall back.
            if round_no == 0:
                continue
            return replace(summary, enrich_warning=True)
        try:
            payload = _extract_json_block(content)
            return _apply_enrichment(summary, payload)
        except (ValueError, CodeBlockMissingError, json.JSONDecodeError) as exc:
            if round_no == 0:
                conv = conv.extended("assistant", content).extended(
                    "user",
                    f"The previous response was invalid: {exc}. Respond again "
                    "with the exact format requested.",
                )
                continue
            return replace(summary, enrich_warning=True)
    return replace(summary, enrich_warning=True)
