"""LLM gateway with deterministic record/replay.

One abstraction over chat-completion providers. Three modes:

* live: POST to the configured endpoint, return the assistant content.
* record: live, then append {fingerprint, content} to the replay store.
* replay: serve from the store; a miss is an error, never a live call.

The fingerprint is a sha256 over the model tag and the
whitespace-canonicalized messages (CRLF folded to LF, trailing
whitespace stripped per line, leading/trailing blank lines dropped),
serialized as compact JSON with sorted keys. Stores are JSON-lines
files ({"fingerprint": ..., "content": ...}) and every *.jsonl file in
the fixture directory is loaded.

Configuration comes from DYNAVIS_LLM_ENDPOINT, DYNAVIS_LLM_KEY,
DYNAVIS_LLM_MODE (live | record | replay; default replay), and
DYNAVIS_FIXTURE_DIR.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import httpx

from ..errors import FixtureDriftError, ReplayMissError, TransportError

DEFAULT_MODEL_TAG = "gpt-default"
DEFAULT_TEMPERATURE = 0.0

MODES = ("live", "record", "replay")


@dataclass(frozen=True)
class Message:
    role: str  # system | user | assistant
    content: str

    def to_json(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class Conversation:
    messages: tuple[Message, ...]
    model_tag: str = DEFAULT_MODEL_TAG
    temperature: float = DEFAULT_TEMPERATURE

    def extended(self, role: str, content: str) -> "Conversation":
        return Conversation(
            self.messages + (Message(role, content),),
            self.model_tag,
            self.temperature,
        )


def conversation(entries: list[tuple[str, str]], model_tag: str = DEFAULT_MODEL_TAG) -> Conversation:
    return Conversation(tuple(Message(r, c) for r, c in entries), model_tag)


def check_well_formed(conv: Conversation) -> None:
    if not conv.messages or conv.messages[0].role != "system":
        raise TransportError("conversation must start with a system message")
    expected = "user"
    for msg in conv.messages[1:]:
        if msg.role != expected:
            raise TransportError(
                f"conversation roles must alternate user/assistant, got {msg.role!r}"
            )
        expected = "assistant" if expected == "user" else "user"
    if conv.messages[-1].role != "user":
        raise TransportError("conversation must end with a user message")


def canonicalize(content: str) -> str:
    lines = [line.rstrip() for line in content.replace("\r\n", "\n").split("\n")]
    while lines and lines[0] == "":
        lines.pop(0)
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines)


def fingerprint(conv: Conversation) -> str:
    payload = json.dumps(
        {
            "model": conv.model_tag,
            "messages": [
                {"role": m.role, "content": canonicalize(m.content)}
                for m in conv.messages
            ],
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class LLMGateway:
    def __init__(
        self,
        mode: str = "replay",
        endpoint: str = "",
        api_key: str = "",
        fixture_dir: Optional[str] = None,
        record_path: Optional[str] = None,
        transport: Optional[httpx.BaseTransport] = None,
        timeout: float = 60.0,
    ):
        if mode not in MODES:
            raise TransportError(f"unknown gateway mode {mode!r}")
        self.mode = mode
        self.endpoint = endpoint
        self.api_key = api_key
        self.fixture_dir = Path(fixture_dir) if fixture_dir else None
        self._record_path = (
            Path(record_path)
            if record_path
            else (self.fixture_dir / "recorded.jsonl" if self.fixture_dir else None)
        )
        self._transport = transport
        self._timeout = timeout
        self._lock = threading.Lock()
        self._store: dict[str, str] = {}
        if self.fixture_dir is not None:
            self._load_store()

    @classmethod
    def from_env(cls, **overrides) -> "LLMGateway":
        kwargs = dict(
            mode=os.environ.get("DYNAVIS_LLM_MODE", "replay"),
            endpoint=os.environ.get("DYNAVIS_LLM_ENDPOINT", ""),
            api_key=os.environ.get("DYNAVIS_LLM_KEY", ""),
            fixture_dir=os.environ.get("DYNAVIS_FIXTURE_DIR") or None,
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def _load_store(self) -> None:
        if not self.fixture_dir.is_dir():
            return
        for path in sorted(self.fixture_dir.glob("*.jsonl")):
            with open(path, "r", encoding="utf-8") as fh:
                for line_no, line in enumerate(fh, 1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        entry = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise FixtureDriftError(
                            f"bad fixture line {path.name}:{line_no}: {exc}"
                        )
                    fp, content = entry["fingerprint"], entry["content"]
                    if fp in self._store and self._store[fp] != content:
                        raise FixtureDriftError(
                            f"fingerprint {fp} recorded twice with different content"
                            f" ({path.name}:{line_no})"
                        )
                    self._store[fp] = content

    def lookup(self, fp: str) -> Optional[str]:
        with self._lock:
            return self._store.get(fp)

    def _post(self, conv: Conversation) -> str:
        if not self.endpoint and self._transport is None:
            raise TransportError(
                "no endpoint configured (set DYNAVIS_LLM_ENDPOINT for live mode)"
            )
        payload = {
            "model": conv.model_tag,
            "messages": [m.to_json() for m in conv.messages],
            "temperature": conv.temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = self.endpoint or "http://gateway.invalid/v1/chat/completions"
        try:
            with httpx.Client(transport=self._transport, timeout=self._timeout) as client:
                response = client.post(url, json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"provider request failed: {exc}")
        if response.status_code != 200:
            raise TransportError(
                f"provider returned {response.status_code}: {response.text[:500]}"
            )
        try:
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"malformed provider response: {exc}")

    def _record(self, fp: str, content: str) -> None:
        with self._lock:
            existing = self._store.get(fp)
            if existing is not None:
                if existing != content:
                    raise FixtureDriftError(
                        f"fingerprint {fp} already recorded with different content"
                    )
                return
            self._store[fp] = content
            if self._record_path is not None:
                self._record_path.parent.mkdir(parents=True, exist_ok=True)
                with open(self._record_path, "a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps(
                            {"fingerprint": fp, "content": content},
                            ensure_ascii=True,
                        )
                        + "\n"
                    )

    def complete(self, conv: Conversation) -> str:
        """Return the assistant reply for a conversation, per mode."""
        check_well_formed(conv)
        fp = fingerprint(conv)
        if self.mode == "replay":
            content = self.lookup(fp)
            if content is None:
                raise ReplayMissError(
                    f"no recorded response for fingerprint {fp}", fingerprint=fp
                )
            return content
        content = self._post(conv)
        if self.mode == "record":
            self._record(fp, content)
        return content
