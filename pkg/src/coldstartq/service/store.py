"""Durable session state: an in-memory map backed by an append-only JSON-lines
log. Every acknowledged mutation is flushed and fsynced before the caller gets
its response, and the log is replayed on startup, so a crash loses at most the
final torn line.
"""

from __future__ import annotations

import json
import logging
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)


class SessionError(Exception):
    pass


class UnknownSession(SessionError):
    pass


class SessionLimitExceeded(SessionError):
    pass


@dataclass
class Session:
    token: str
    client_ip: str
    created_at: float
    responses: dict[int, str] = field(default_factory=dict)
    completed: bool = False
    comparison_assignment: int | None = None  # 0: ours first, 1: baseline first
    feedback: dict[str, str] | None = None


class SessionStore:
    """Sessions keyed by unguessable token, persisted to a JSON-lines log."""

    def __init__(self, log_path, max_sessions_per_ip: int = 100):
        self._path = Path(log_path)
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._by_ip: dict[str, int] = {}
        self.max_sessions_per_ip = max_sessions_per_ip
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._replay()
        self._fh = open(self._path, "a", encoding="utf-8")

    # -- persistence ------------------------------------------------------

    def _replay(self) -> None:
        if not self._path.exists():
            return
        raw = self._path.read_text(encoding="utf-8")
        lines = raw.split("\n")
        for i, line in enumerate(lines):
            if not line:
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError:
                if i >= len(lines) - 2:
                    logger.warning("skipping torn trailing log line %d", i + 1)
                    continue
                raise SessionError(f"corrupt session log at line {i + 1}")
            self._apply(event)

    def _apply(self, event: dict) -> None:
        kind = event["kind"]
        if kind == "created":
            s = Session(
                token=event["token"],
                client_ip=event["ip"],
                created_at=event["at"],
            )
            self._sessions[s.token] = s
            self._by_ip[s.client_ip] = self._by_ip.get(s.client_ip, 0) + 1
        elif kind == "response":
            s = self._sessions[event["token"]]
            s.responses[int(event["question"])] = event["level"]
        elif kind == "completed":
            s = self._sessions[event["token"]]
            for q, level in event.get("filled", {}).items():
                s.responses[int(q)] = level
            s.completed = True
        elif kind == "assignment":
            self._sessions[event["token"]].comparison_assignment = int(event["order"])
        elif kind == "feedback":
            self._sessions[event["token"]].feedback = dict(event["answers"])
        else:
            raise SessionError(f"unknown log event kind {kind!r}")

    def _append(self, event: dict) -> None:
        self._fh.write(json.dumps(event, sort_keys=True) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    # -- operations -------------------------------------------------------

    def create(self, client_ip: str) -> Session:
        with self._lock:
            if self._by_ip.get(client_ip, 0) >= self.max_sessions_per_ip:
                raise SessionLimitExceeded(
                    f"{client_ip} already has {self.max_sessions_per_ip} sessions"
                )
            token = secrets.token_urlsafe(16)
            event = {"kind": "created", "token": token, "ip": client_ip, "at": time.time()}
            self._append(event)
            self._apply(event)
            return self._sessions[token]

    def get(self, token: str) -> Session:
        try:
            return self._sessions[token]
        except KeyError:
            raise UnknownSession(token) from None

    def record_response(self, token: str, question: int, level: str) -> bool:
        """Store one answer; returns True when it supersedes an earlier one."""
        with self._lock:
            s = self.get(token)
            if s.completed:
                raise SessionError("session already completed")
            superseded = question in s.responses
            event = {"kind": "response", "token": token, "question": question, "level": level}
            self._append(event)
            self._apply(event)
            return superseded

    def complete(self, token: str, fill: dict[int, str] | None = None) -> None:
        """Mark completed (idempotent); `fill` supplies answers for unanswered
        questions, recorded in the same log event."""
        with self._lock:
            s = self.get(token)
            if s.completed:
                return
            event = {
                "kind": "completed",
                "token": token,
                "filled": {str(q): lvl for q, lvl in (fill or {}).items()},
            }
            self._append(event)
            self._apply(event)

    def record_assignment(self, token: str, order: int) -> None:
        with self._lock:
            s = self.get(token)
            if s.comparison_assignment is not None:
                return
            event = {"kind": "assignment", "token": token, "order": order}
            self._append(event)
            self._apply(event)

    def record_feedback(self, token: str, answers: dict[str, str]) -> None:
        with self._lock:
            self.get(token)
            event = {"kind": "feedback", "token": token, "answers": answers}
            self._append(event)
            self._apply(event)

    def close(self) -> None:
        self._fh.close()

    def __len__(self) -> int:
        return len(self._sessions)
