"""Target groups: health-gated (host, port) endpoints with round-robin
selection among the healthy.

A target starts Unknown and receives no traffic until it accumulates the
configured number of consecutive passing checks.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from ..httpd import TransportError, http_call

DEFAULT_CHECK_INTERVAL = 10.0
DEFAULT_HEALTHY_THRESHOLD = 2
DEFAULT_UNHEALTHY_THRESHOLD = 2


class TargetHealthState(str, Enum):
    UNKNOWN = "unknown"
    HEALTHY = "healthy"
    UNHEALTHY = "unhealthy"


@dataclass
class TargetHealth:
    state: TargetHealthState = TargetHealthState.UNKNOWN
    consecutive_passes: int = 0
    consecutive_failures: int = 0


@dataclass
class TargetGroup:
    group_id: str
    health_check_path: str
    expected_status: frozenset[int]
    healthy_threshold: int = DEFAULT_HEALTHY_THRESHOLD
    unhealthy_threshold: int = DEFAULT_UNHEALTHY_THRESHOLD
    check_interval: float = DEFAULT_CHECK_INTERVAL
    targets: dict[tuple[str, int], TargetHealth] = field(default_factory=dict)
    last_checked: float | None = None
    _rr: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def register_target(self, host: str, port: int) -> None:
        with self._lock:
            self.targets.setdefault((host, port), TargetHealth())

    def deregister_target(self, host: str, port: int) -> None:
        with self._lock:
            self.targets.pop((host, port), None)

    def healthy_targets(self) -> list[tuple[str, int]]:
        with self._lock:
            return [t for t, h in self.targets.items() if h.state is TargetHealthState.HEALTHY]

    def pick_target(self) -> tuple[str, int] | None:
        """Round-robin over healthy targets only."""
        with self._lock:
            healthy = sorted(t for t, h in self.targets.items() if h.state is TargetHealthState.HEALTHY)
            if not healthy:
                return None
            choice = healthy[self._rr % len(healthy)]
            self._rr += 1
            return choice

    def observe(self, target: tuple[str, int], passed: bool) -> None:
        with self._lock:
            health = self.targets.get(target)
            if health is None:
                return
            if passed:
                health.consecutive_passes += 1
                health.consecutive_failures = 0
                if health.consecutive_passes >= self.healthy_threshold:
                    health.state = TargetHealthState.HEALTHY
            else:
                health.consecutive_failures += 1
                health.consecutive_passes = 0
                if health.consecutive_failures >= self.unhealthy_threshold:
                    health.state = TargetHealthState.UNHEALTHY


class TargetGroupRegistry:
    def __init__(self) -> None:
        self._groups: dict[str, TargetGroup] = {}
        self._lock = threading.Lock()

    def create(
        self,
        group_id: str,
        health_check_path: str,
        expected_status,
        check_interval: float = DEFAULT_CHECK_INTERVAL,
    ) -> TargetGroup:
        with self._lock:
            if group_id in self._groups:
                raise ValueError(f"target group {group_id!r} exists")
            group = TargetGroup(
                group_id=group_id,
                health_check_path=health_check_path,
                expected_status=frozenset(expected_status),
                check_interval=check_interval,
            )
            self._groups[group_id] = group
            return group

    def remove(self, group_id: str) -> None:
        with self._lock:
            self._groups.pop(group_id, None)

    def get(self, group_id: str) -> TargetGroup | None:
        with self._lock:
            return self._groups.get(group_id)

    def all(self) -> list[TargetGroup]:
        with self._lock:
            return list(self._groups.values())

    def __len__(self) -> int:
        with self._lock:
            return len(self._groups)


def _default_probe(host: str, port: int, path: str) -> int | None:
    try:
        return http_call("GET", host, port, path, timeout=2.0).status
    except TransportError:
        return None


ProbeFn = Callable[[str, int, str], "int | None"]


def run_health_checks(
    groups: TargetGroupRegistry | list[TargetGroup],
    now: float,
    probe: ProbeFn = _default_probe,
    force: bool = False,
) -> None:
    """Probe each group's targets when its interval elapsed; a status in
    expected_status counts as a pass, anything else (including transport
    failure) as a fail."""
    group_list = groups.all() if isinstance(groups, TargetGroupRegistry) else groups
    for group in group_list:
        if not force and group.last_checked is not None and now - group.last_checked < group.check_interval:
            continue
        group.last_checked = now
        for target in list(group.targets):
            status = probe(target[0], target[1], group.health_check_path)
            group.observe(target, status is not None and status in group.expected_status)
