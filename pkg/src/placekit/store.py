"""Append-only run persistence.

Each pipeline event (plan, select) is one JSON line; replaying the log in
order reconstructs every run's latest state, so a restarted service serves
identical records.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path


class RunStore:
    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path = self.directory / "runs.jsonl"
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True)
        with self._lock:
            with self.path.open("a") as fh:
                fh.write(line + "\n")

    def replay(self) -> list[dict]:
        if not self.path.exists():
            return []
        events = []
        with self.path.open() as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events


class NullStore(RunStore):
    """In-memory stand-in used when persistence is not requested."""

    def __init__(self):  # noqa: super().__init__ intentionally skipped
        self.events: list[dict] = []
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        with self._lock:
            self.events.append(json.loads(json.dumps(event, sort_keys=True)))

    def replay(self) -> list[dict]:
        return list(self.events)
