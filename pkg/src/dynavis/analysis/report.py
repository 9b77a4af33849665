"""Findings and reports produced by the widget analyses."""

from __future__ import annotations

from dataclasses import dataclass

# static rules: id_conflict, signature, unresolved_id, null_safety,
# classification; parse failures and the sandbox smoke test add the rest
RULES = (
    "id_conflict",
    "signature",
    "unresolved_id",
    "null_safety",
    "classification",
    "markup_parse",
    "script_parse",
    "runtime",
    "validation",
)

SEVERITIES = ("error", "warning")


@dataclass(frozen=True)
class Finding:
    rule: str
    severity: str
    message: str
    location: str = ""

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "severity": self.severity,
            "message": self.message,
            "location": self.location,
        }


@dataclass(frozen=True)
class AnalysisReport:
    findings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def merged(self, other: "AnalysisReport") -> "AnalysisReport":
        return AnalysisReport(self.findings + other.findings)

    def to_json(self) -> dict:
        return {"ok": self.ok, "findings": [f.to_json() for f in self.findings]}

    def render(self) -> str:
        if not self.findings:
            return "ok"
        return "; ".join(
            f"[{f.severity}] {f.rule}"
            + (f" at {f.location}" if f.location else "")
            + f": {f.message}"
            for f in self.findings
        )


def report(*findings: Finding) -> AnalysisReport:
    return AnalysisReport(tuple(findings))
