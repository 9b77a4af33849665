"""Shared exception types.

Every error that can cross the service boundary carries a stable
``error_kind`` tag and an optional JSON-pointer ``detail_path`` so REST
error bodies can be produced uniformly.
"""

from __future__ import annotations

from typing import Optional


class DynavisError(Exception):
    """Base class for engine errors."""

    error_kind = "internal"

    def __init__(self, message: str, detail_path: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.detail_path = detail_path


class PointerError(DynavisError):
    """A JSON pointer could not be applied to a document."""

    error_kind = "pointer"


class PointerConflictError(PointerError):
    """A pointer segment traverses through a non-container value."""

    error_kind = "pointer_conflict"


class SplitError(DynavisError):
    """`data.values` is malformed (non-array or ragged records)."""

    error_kind = "malformed_data"


class DatasetError(DynavisError):
    """A dataset payload could not be parsed into a table."""

    error_kind = "dataset"


class RegistryError(DynavisError):
    error_kind = "registry"


class DuplicateWidgetError(RegistryError):
    error_kind = "duplicate_widget"


class UnknownWidgetError(RegistryError):
    error_kind = "unknown_widget"


class NotTransformWidgetError(RegistryError):
    error_kind = "not_transform_widget"


class EffectiveSpecError(DynavisError):
    """The composed spec failed validation; carries the report."""

    error_kind = "invalid_effective_spec"

    def __init__(self, message: str, report, detail_path: Optional[str] = None):
        super().__init__(message, detail_path)
        self.report = report


class MarkupParseError(DynavisError):
    error_kind = "markup_parse"

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.line = line
        self.column = column


class ScriptParseError(DynavisError):
    error_kind = "script_parse"

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.line = line
        self.column = column


class JsRuntimeError(DynavisError):
    """The analysis daemon failed outside of normal parse errors."""

    error_kind = "js_runtime"


class CodeBlockMissingError(DynavisError):
    error_kind = "missing_code_block"


class GatewayError(DynavisError):
    error_kind = "gateway"


class TransportError(GatewayError):
    error_kind = "transport"


class ReplayMissError(GatewayError):
    error_kind = "replay_miss"

    def __init__(self, message: str, fingerprint: str):
        super().__init__(message)
        self.fingerprint = fingerprint


class FixtureDriftError(GatewayError):
    error_kind = "fixture_drift"


class SynthesisError(DynavisError):
    """Both synthesis attempts exhausted; carries the full transcript."""

    error_kind = "synthesis"

    def __init__(self, message: str, transcript, attempts: int, errors=None):
        super().__init__(message)
        self.transcript = transcript
        self.attempts = attempts
        self.errors = errors or []


class SessionNotFoundError(DynavisError):
    error_kind = "session_not_found"


class NoBaseChartError(DynavisError):
    error_kind = "no_base_chart"


class InvalidResultError(DynavisError):
    """A widget result was rejected (bad transforms or invalid chart)."""

    error_kind = "invalid_result"

    def __init__(self, message: str, report=None, detail_path: Optional[str] = None):
        super().__init__(message, detail_path)
        self.report = report


class UnknownInputError(DynavisError):
    """A synthetic event targets an id with no input element."""

    error_kind = "unknown_input"


class InvalidRequestError(DynavisError):
    """A request body that fails structural checks before reaching the engine."""

    error_kind = "bad_request"
