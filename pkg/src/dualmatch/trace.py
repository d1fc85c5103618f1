"""Append-only event stream recording a matching run.

Every observable step (batch selection, oracle answers, committee refits,
slow-loop publications, snapshots, verification) is one JSON object per line.
The stream is the single source of truth: evaluation reports and session
recovery are both derived purely from it. Serialization is canonical
(sorted keys, fixed separators) so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable


def canonical_json(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


class RunTrace:
    def __init__(self, sink: str | Path | None = None):
        self.events: list[dict] = []
        self._handle = open(sink, "a") if sink is not None else None

    def append(self, event: dict) -> None:
        if "type" not in event:
            raise ValueError("trace events need a 'type'")
        self.events.append(event)
        if self._handle is not None:
            self._handle.write(canonical_json(event) + "\n")
            self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def attach(self, sink: str | Path) -> None:
        """Start appending future events to a file (existing events untouched)."""
        self.close()
        self._handle = open(sink, "a")

    def write(self, path: str | Path) -> None:
        Path(path).write_text("".join(canonical_json(e) + "\n" for e in self.events))

    def of_type(self, event_type: str) -> list[dict]:
        return [e for e in self.events if e["type"] == event_type]

    def last_of_type(self, event_type: str) -> dict | None:
        for event in reversed(self.events):
            if event["type"] == event_type:
                return event
        return None

    @classmethod
    def read(cls, path: str | Path) -> "RunTrace":
        trace = cls()
        trace.events = list(read_events(path))
        return trace

    def __enter__(self) -> "RunTrace":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_events(path: str | Path) -> Iterable[dict]:
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)
