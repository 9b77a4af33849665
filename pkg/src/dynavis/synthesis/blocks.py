"""Markdown fenced code-block extraction."""

from __future__ import annotations

from ..errors import CodeBlockMissingError


def extract_code_block(text: str, tag: str) -> str:
    """Contents of the first fenced block whose descriptor equals tag.

    Fence lines are excluded. Missing block is an error.
    """
    lines = text.split("\n")
    inside = False
    matched = False
    collected: list[str] = []
    for line in lines:
        stripped = line.strip()
        if not inside:
            if stripped.startswith("```"):
                descriptor = stripped[3:].strip()
                inside = True
                matched = descriptor == tag
                collected = []
        else:
            if stripped == "```":
                if matched:
                    return "\n".join(collected)
                inside = False
            elif matched:
                collected.append(line)
    raise CodeBlockMissingError(f"missing code block {tag}")
