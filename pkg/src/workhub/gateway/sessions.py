"""Gateway login sessions and the built-in test identity provider.

Stands in for the managed OIDC federation: a password table and an opaque
server-side session keyed by a random cookie value with idle expiry.
"""

from __future__ import annotations

import hmac
import secrets
import threading
from dataclasses import dataclass

DEFAULT_IDLE_TIMEOUT = 8 * 3600.0
USER_ID_PATTERN = "[a-z0-9_-]{1,32}"


def valid_user_id(user_id: str) -> bool:
    return (
        0 < len(user_id) <= 32
        and all(c.islower() or c.isdigit() or c in "_-" for c in user_id)
        and user_id.isascii()
    )


class TestIdentityProvider:
    __test__ = False  # keep pytest from collecting this as a test case

    def __init__(self, users: dict[str, str] | None = None) -> None:
        self._users: dict[str, str] = {}
        for name, password in (users or {}).items():
            self.add_user(name, password)

    def add_user(self, username: str, password: str) -> None:
        if not valid_user_id(username):
            raise ValueError(f"user id {username!r} must match {USER_ID_PATTERN}")
        self._users[username] = password

    def authenticate(self, username: str, password: str) -> bool:
        stored = self._users.get(username)
        if stored is None:
            return False
        return hmac.compare_digest(stored.encode(), password.encode())

    def usernames(self) -> list[str]:
        return sorted(self._users)


@dataclass
class _Session:
    username: str
    created: float
    last_seen: float


class GatewaySessionStore:
    def __init__(self, idle_timeout: float = DEFAULT_IDLE_TIMEOUT) -> None:
        self.idle_timeout = idle_timeout
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def create(self, username: str, now: float) -> str:
        session_id = secrets.token_urlsafe(24)
        with self._lock:
            self._sessions[session_id] = _Session(username, now, now)
        return session_id

    def lookup(self, session_id: str, now: float) -> str | None:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                return None
            if now - session.last_seen > self.idle_timeout:
                del self._sessions[session_id]
                return None
            session.last_seen = now
            return session.username

    def revoke(self, session_id: str) -> None:
        with self._lock:
            self._sessions.pop(session_id, None)
