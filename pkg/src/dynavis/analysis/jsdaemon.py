"""Client for the node-based script parser.

A single long-lived node process serves parse/tokenize requests over a
line-delimited JSON protocol. The process starts lazily, restarts after
a crash, and is shared behind a lock so callers from any thread see one
serialized request stream.
"""

from __future__ import annotations

import atexit
import json
import os
import subprocess
import threading
from pathlib import Path
from typing import Any, Optional

from ..errors import JsRuntimeError, ScriptParseError

DAEMON_PATH = Path(__file__).parent / "daemon.mjs"

_REQUEST_TIMEOUT = 20.0


def node_binary() -> str:
    return os.environ.get("DYNAVIS_NODE", "node")


class JsDaemon:
    def __init__(self):
        self._proc: Optional[subprocess.Popen] = None
        self._lock = threading.Lock()
        self._next_id = 0

    def _ensure_running(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    [node_binary(), str(DAEMON_PATH)],
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL,
                    text=True,
                    encoding="utf-8",
                )
            except OSError as exc:
                raise JsRuntimeError(
                    f"cannot start node (set DYNAVIS_NODE if not on PATH): {exc}"
                )
        return self._proc

    def _request(self, op: str, **kwargs) -> dict:
        with self._lock:
            self._next_id += 1
            request = {"id": self._next_id, "op": op, **kwargs}
            last_error = None
            for _attempt in (1, 2):
                proc = self._ensure_running()
                try:
                    proc.stdin.write(json.dumps(request, ensure_ascii=True) + "\n")
                    proc.stdin.flush()
                    line = proc.stdout.readline()
                except (BrokenPipeError, OSError) as exc:
                    last_error = exc
                    self._kill()
                    continue
                if not line:
                    last_error = JsRuntimeError("parser process closed its pipe")
                    self._kill()
                    continue
                try:
                    return json.loads(line)
                except json.JSONDecodeError as exc:
                    last_error = exc
                    self._kill()
                    continue
            raise JsRuntimeError(f"parser daemon failed: {last_error}")

    def _kill(self) -> None:
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
            self._proc = None

    def shutdown(self) -> None:
        with self._lock:
            self._kill()

    def parse(self, source: str) -> dict:
        """Script source -> ESTree AST (as plain JSON)."""
        resp = self._request("parse", source=source)
        if not resp.get("ok"):
            loc = resp.get("loc") or {}
            raise ScriptParseError(
                resp.get("error", "parse error"),
                line=loc.get("line", 0),
                column=loc.get("column", 0),
            )
        return resp["ast"]

    def tokenize(self, source: str) -> list[dict]:
        """Script source -> token list with type/value/span."""
        resp = self._request("tokenize", source=source)
        if not resp.get("ok"):
            loc = resp.get("loc") or {}
            raise ScriptParseError(
                resp.get("error", "tokenize error"),
                line=loc.get("line", 0),
                column=loc.get("column", 0),
            )
        return resp["tokens"]


_daemon = JsDaemon()
atexit.register(_daemon.shutdown)


def parse_script(source: str) -> dict:
    return _daemon.parse(source)


def tokenize_script(source: str) -> list[dict]:
    return _daemon.tokenize(source)
