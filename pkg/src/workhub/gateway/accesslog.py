"""Append-only access log.

Every request entering a listener produces exactly one record, including
authentication failures, redirects, and unmatched paths. Sinks expose
append and read-back only; there is no delete or rewrite operation.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import asdict, dataclass
from pathlib import Path

log = logging.getLogger(__name__)

OUTCOME_SUCCESS = "success"
OUTCOME_FAILURE = "failure"
OUTCOME_NOT_REQUIRED = "not-required"


@dataclass(frozen=True)
class AccessLogRecord:
    timestamp: float
    client: str
    method: str
    host: str
    path: str
    rule_priority: int | None
    auth_outcome: str
    auth_reason: str | None
    target: str | None
    status: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"), sort_keys=True)


class MemoryAccessLog:
    def __init__(self) -> None:
        self._records: list[AccessLogRecord] = []
        self._lock = threading.Lock()

    def append(self, record: AccessLogRecord) -> None:
        with self._lock:
            self._records.append(record)

    def snapshot(self) -> tuple[AccessLogRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


class JsonlAccessLog:
    """One JSON object per line, flushed per record, opened append-only.

    Sink failures are surfaced to operators via logging but never block
    request handling.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._file = open(self.path, "a", encoding="utf-8")

    def append(self, record: AccessLogRecord) -> None:
        try:
            with self._lock:
                self._file.write(record.to_json() + "\n")
                self._file.flush()
        except OSError as exc:
            log.error("access log append failed: %s", exc)

    def close(self) -> None:
        with self._lock:
            self._file.close()


def read_records(path: str | Path) -> list[AccessLogRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(AccessLogRecord(**json.loads(line)))
    return records
