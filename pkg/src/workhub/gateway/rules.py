"""Listener rules: priority-ordered host/path matching to an action."""

from __future__ import annotations

import fnmatch
import threading
from dataclasses import dataclass
from enum import Enum


class ActionKind(str, Enum):
    AUTHENTICATE_THEN_FORWARD = "authenticate-then-forward"
    FORWARD = "forward"
    PUBLIC_FORWARD = "public-forward"
    REDIRECT_TO_SECURE = "redirect-to-secure"


@dataclass(frozen=True)
class RuleAction:
    kind: ActionKind
    target_group: str | None = None

    @classmethod
    def authenticate_then_forward(cls, target_group: str) -> "RuleAction":
        return cls(ActionKind.AUTHENTICATE_THEN_FORWARD, target_group)

    @classmethod
    def forward(cls, target_group: str) -> "RuleAction":
        return cls(ActionKind.FORWARD, target_group)

    @classmethod
    def public_forward(cls, target_group: str) -> "RuleAction":
        return cls(ActionKind.PUBLIC_FORWARD, target_group)

    @classmethod
    def redirect_to_secure(cls) -> "RuleAction":
        return cls(ActionKind.REDIRECT_TO_SECURE)


@dataclass(frozen=True)
class ListenerRule:
    rule_id: str
    priority: int
    path_pattern: str
    action: RuleAction
    host_pattern: str | None = None

    def matches(self, host: str, path: str) -> bool:
        if self.host_pattern is not None:
            hostname = host.split(":", 1)[0]
            if not fnmatch.fnmatchcase(hostname, self.host_pattern):
                return False
        return fnmatch.fnmatchcase(path, self.path_pattern)


def match_request(rules: list[ListenerRule], host: str, path: str) -> ListenerRule | None:
    """First rule (ascending priority) whose host and path patterns both
    match; None means the gateway's default 404."""
    for rule in sorted(rules, key=lambda r: r.priority):
        if rule.matches(host, path):
            return rule
    return None


class DuplicatePriorityError(ValueError):
    pass


class RoutingTable:
    """Shared rule table: read-mostly, writers serialized."""

    def __init__(self) -> None:
        self._rules: dict[str, ListenerRule] = {}
        self._lock = threading.Lock()

    def add(self, rule: ListenerRule) -> None:
        with self._lock:
            if any(r.priority == rule.priority for r in self._rules.values()):
                raise DuplicatePriorityError(f"priority {rule.priority} already installed")
            if rule.rule_id in self._rules:
                raise ValueError(f"rule id {rule.rule_id!r} already installed")
            self._rules[rule.rule_id] = rule

    def remove(self, rule_id: str) -> None:
        with self._lock:
            self._rules.pop(rule_id, None)

    def rules(self) -> list[ListenerRule]:
        with self._lock:
            return sorted(self._rules.values(), key=lambda r: r.priority)

    def match(self, host: str, path: str) -> ListenerRule | None:
        return match_request(self.rules(), host, path)

    def __len__(self) -> int:
        with self._lock:
            return len(self._rules)
