"""Append-only JSONL event log for optimizer runs.

Every solver, the DAG builder and the pipeline report what they do here
instead of printing. The envelope is fixed and versioned; the optional file
sink appends one line per event under an exclusive lock so parallel runs can
share a log.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from contextlib import contextmanager
from contextvars import ContextVar
from pathlib import Path
from typing import Any, Iterator

EVENT_VERSION = 1

_run_id_var: ContextVar[str | None] = ContextVar("mqopt_run_id", default=None)


def now_ts_ms() -> int:
    return time.time_ns() // 1_000_000


def new_run_id() -> str:
    return uuid.uuid4().hex


def current_run_id() -> str | None:
    return _run_id_var.get()


@contextmanager
def run_context(*, run_id: str | None) -> Iterator[None]:
    token = _run_id_var.set(run_id)
    try:
        yield
    finally:
        _run_id_var.reset(token)


class EventLog:
    """In-memory event buffer with an optional JSONL file sink."""

    def __init__(self, path: Path | None = None) -> None:
        self.path = path
        self.records: list[dict[str, Any]] = []

    def emit(
        self,
        event_type: str,
        *,
        source: str,
        payload: dict[str, Any] | None = None,
        run_id: str | None = None,
    ) -> dict[str, Any]:
        if payload is None:
            payload = {}
        if not isinstance(payload, dict):
            raise TypeError("payload must be a dict")

        event: dict[str, Any] = {
            "v": EVENT_VERSION,
            "ts_ms": now_ts_ms(),
            "type": event_type,
            "source": source,
        }
        resolved_run_id = run_id if run_id is not None else current_run_id()
        if resolved_run_id is not None:
            event["run_id"] = resolved_run_id
        event["payload"] = payload

        self.records.append(event)
        if self.path is not None:
            self._append(event)
        return event

    def of_type(self, prefix: str) -> list[dict[str, Any]]:
        return [ev for ev in self.records if ev["type"].startswith(prefix)]

    def _append(self, event: dict[str, Any]) -> None:
        data = (json.dumps(event, separators=(",", ":"), ensure_ascii=True) + "\n").encode()
        assert self.path is not None
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            try:
                import fcntl
            except ImportError:  # pragma: no cover - non-POSIX
                fcntl = None  # type: ignore[assignment]
            if fcntl is not None:
                fcntl.flock(fd, fcntl.LOCK_EX)
            try:
                view = memoryview(data)
                while view:
                    n = os.write(fd, view)
                    if n <= 0:
                        raise OSError("short write while appending event log")
                    view = view[n:]
            finally:
                if fcntl is not None:
                    fcntl.flock(fd, fcntl.LOCK_UN)
        finally:
            os.close(fd)


def read_events(path: Path) -> list[dict[str, Any]]:
    if not path.exists():
        return []
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]
