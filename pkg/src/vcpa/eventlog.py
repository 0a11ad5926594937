"""Append-only JSONL event log.

One JSON object per line, written under a lock, each line flushed before
the call returns (optionally fsynced). Delivery is at-least-once: a crash
between flush and caller acknowledgement may leave a line that the caller
retries, so readers must tolerate exact duplicates.
"""
from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Iterable, Iterator

from .errors import IoFailure
from .model import SessionEvent


class EventLog:
    def __init__(self, path: str | Path, *, fsync: bool = False) -> None:
        self.path = Path(path)
        self.fsync = fsync
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, events: Iterable[SessionEvent]) -> int:
        """Append events in order; returns how many lines were written."""
        lines = [json.dumps(e.to_dict(), sort_keys=True) for e in events]
        if not lines:
            return 0
        payload = "".join(line + "\n" for line in lines)
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(payload)
                    fh.flush()
                    if self.fsync:
                        os.fsync(fh.fileno())
            except OSError as exc:
                raise IoFailure(f"cannot append to {self.path}: {exc}") from exc
        return len(lines)

    def __iter__(self) -> Iterator[SessionEvent]:
        return iter(self.read_all())

    def read_all(self) -> list[SessionEvent]:
        if not self.path.exists():
            return []
        events = []
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read {self.path}: {exc}") from exc
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                events.append(SessionEvent.from_dict(json.loads(line)))
            except (ValueError, KeyError) as exc:
                raise IoFailure(f"{self.path}:{number}: bad event record ({exc})") from exc
        return events

    def read_session(self, session_id: str) -> list[SessionEvent]:
        return [e for e in self.read_all() if e.session_id == session_id]
