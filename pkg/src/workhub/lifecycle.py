"""Service lifecycle: desired-count reconciliation, activity tracking,
idle culling, and the application-side shutdown hook.

A service holds a desired count of 0 or 1. Reconciliation starts or stops
tasks to match, registers tasks with the service's target group once the
backend reports them fully started, and replaces tasks that die on their
own. Culling drives the count to 0 when the idle clock expires; the
shutdown hook does the same from inside the task, with a grace delay so
the count update lands before the process exits.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

from .backend.interface import (
    AlreadyStoppedError,
    BackendError,
    NoSuchTaskError,
    TaskDefinitionRecord,
    TaskHandle,
    TaskState,
)
from .clock import Clock
from .gateway.targets import TargetGroupRegistry

DEFAULT_API_LATENCY = 1.0
DEFAULT_RECONCILE_INTERVAL = 5.0


@dataclass(frozen=True)
class CullPolicy:
    idle_timeout: float = 1800.0
    cull_interval: float = 60.0
    kernel_cull_timeout: float = 600.0
    shell_timeout: float = 900.0
    shutdown_grace: float = 120.0

    def __post_init__(self) -> None:
        if self.cull_interval <= 0:
            raise ValueError("cull_interval must be positive")
        if self.idle_timeout <= 0:
            raise ValueError("idle_timeout must be positive")
        if self.shutdown_grace < 0:
            raise ValueError("shutdown_grace may not be negative")


@dataclass(frozen=True)
class ServiceEvent:
    timestamp: float
    service_id: str
    event: str
    detail: str = ""


class MemoryEventSink:
    def __init__(self) -> None:
        self._events: list[ServiceEvent] = []
        self._lock = threading.Lock()

    def append(self, event: ServiceEvent) -> None:
        with self._lock:
            self._events.append(event)

    def snapshot(self) -> tuple[ServiceEvent, ...]:
        with self._lock:
            return tuple(self._events)


@dataclass
class ServiceRecord:
    service_id: str
    stack_ref: str
    task_definition: TaskDefinitionRecord
    target_group_id: str
    policy: CullPolicy
    desired_count: int = 0
    tasks: list[TaskHandle] = field(default_factory=list)
    registered: set[str] = field(default_factory=set)
    last_activity: float = 0.0
    last_cull_check: float | None = None


class NoSuchServiceError(Exception):
    pass


class InvalidCountError(ValueError):
    pass


class ServiceRegistry:
    """Owns every ServiceRecord; one reconciler per service, serialized per
    service id."""

    def __init__(
        self,
        clock: Clock,
        backend,
        target_groups: TargetGroupRegistry,
        events: MemoryEventSink | None = None,
        api_latency: float = DEFAULT_API_LATENCY,
        reconcile_interval: float = DEFAULT_RECONCILE_INTERVAL,
    ) -> None:
        self.clock = clock
        self.backend = backend
        self.target_groups = target_groups
        self.events = events or MemoryEventSink()
        self.api_latency = api_latency
        self.reconcile_interval = reconcile_interval
        self._services: dict[str, ServiceRecord] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._table_lock = threading.Lock()

    # -- registry ---------------------------------------------------------------

    def create_service(
        self,
        service_id: str,
        stack_ref: str,
        task_definition: TaskDefinitionRecord,
        target_group_id: str,
        policy: CullPolicy | None = None,
    ) -> ServiceRecord:
        with self._table_lock:
            if service_id in self._services:
                raise ValueError(f"service {service_id!r} exists")
            record = ServiceRecord(
                service_id=service_id,
                stack_ref=stack_ref,
                task_definition=task_definition,
                target_group_id=target_group_id,
                policy=policy or CullPolicy(),
                last_activity=self.clock.now(),
            )
            self._services[service_id] = record
            self._locks[service_id] = threading.RLock()
            return record

    def delete_service(self, service_id: str) -> None:
        with self._lock_for(service_id):
            record = self.get(service_id)
            group = self.target_groups.get(record.target_group_id)
            for handle in record.tasks:
                if group is not None and handle.task_id in record.registered:
                    group.deregister_target(handle.host, handle.port)
                try:
                    self.backend.stop_task(handle)
                except (AlreadyStoppedError, NoSuchTaskError):
                    pass
            with self._table_lock:
                del self._services[service_id]
                del self._locks[service_id]
            self._event(service_id, "delete")

    def get(self, service_id: str) -> ServiceRecord:
        with self._table_lock:
            record = self._services.get(service_id)
        if record is None:
            raise NoSuchServiceError(service_id)
        return record

    def services(self) -> list[ServiceRecord]:
        with self._table_lock:
            return list(self._services.values())

    def __len__(self) -> int:
        with self._table_lock:
            return len(self._services)

    # -- desired count ------------------------------------------------------------

    def set_desired_count(self, service_id: str, n: int) -> ServiceRecord:
        if n not in (0, 1):
            raise InvalidCountError(f"desired count must be 0 or 1, got {n}")
        with self._lock_for(service_id):
            record = self.get(service_id)
            record.desired_count = n
            self._event(service_id, "desired-count", str(n))
            return record

    def submit_desired_count(self, service_id: str, n: int) -> None:
        """Count update issued from inside a task: lands after the simulated
        API latency rather than immediately."""
        if n not in (0, 1):
            raise InvalidCountError(f"desired count must be 0 or 1, got {n}")

        def apply() -> None:
            try:
                self.set_desired_count(service_id, n)
            except NoSuchServiceError:
                pass

        self.clock.schedule(self.clock.now() + self.api_latency, apply)

    # -- activity & culling ----------------------------------------------------------

    def record_activity(self, service_id: str, now: float) -> float:
        with self._lock_for(service_id):
            record = self.get(service_id)
            record.last_activity = max(record.last_activity, now)
            return record.last_activity

    def idle(self, service_id: str, now: float) -> bool:
        record = self.get(service_id)
        return now - record.last_activity > record.policy.idle_timeout

    def cull_scan(self, now: float, force: bool = False) -> list[str]:
        """Supervisor-side enforcement complementing the in-app hook: any
        service at desired 1 idle past its timeout is driven to 0."""
        culled: list[str] = []
        for record in self.services():
            with self._lock_for(record.service_id):
                if not force and record.last_cull_check is not None:
                    if now - record.last_cull_check < record.policy.cull_interval:
                        continue
                record.last_cull_check = now
                if record.desired_count == 1 and now - record.last_activity > record.policy.idle_timeout:
                    record.desired_count = 0
                    culled.append(record.service_id)
                    self._event(record.service_id, "cull", f"idle {now - record.last_activity:.0f}s")
        return culled

    # -- reconciliation -----------------------------------------------------------------

    def reconcile(self, service_id: str) -> list[str]:
        with self._lock_for(service_id):
            record = self.get(service_id)
            group = self.target_groups.get(record.target_group_id)
            actions: list[str] = []
            task_died = False

            survivors: list[TaskHandle] = []
            for handle in record.tasks:
                try:
                    state = self.backend.task_status(handle)
                except NoSuchTaskError:
                    state = TaskState.STOPPED
                if state is TaskState.STOPPED:
                    if group is not None and handle.task_id in record.registered:
                        group.deregister_target(handle.host, handle.port)
                    record.registered.discard(handle.task_id)
                    task_died = True
                    actions.append(f"pruned:{handle.task_id}")
                else:
                    survivors.append(handle)
            record.tasks = survivors

            if record.desired_count > len(record.tasks):
                try:
                    handle = self.backend.run_task(record.task_definition)
                except BackendError as exc:
                    actions.append(f"start-failed:{exc}")
                    self._event(service_id, "start-failed", str(exc))
                else:
                    record.tasks.append(handle)
                    event = "restart" if task_died else "start"
                    actions.append(f"{event}:{handle.task_id}")
                    self._event(service_id, event, handle.task_id)
            elif record.desired_count < len(record.tasks):
                handle = record.tasks.pop()
                if group is not None and handle.task_id in record.registered:
                    group.deregister_target(handle.host, handle.port)
                record.registered.discard(handle.task_id)
                try:
                    self.backend.stop_task(handle)
                except (AlreadyStoppedError, NoSuchTaskError):
                    pass
                actions.append(f"stop:{handle.task_id}")
                self._event(service_id, "stop", handle.task_id)

            for handle in record.tasks:
                if handle.task_id in record.registered:
                    continue
                if self.backend.task_status(handle) is TaskState.RUNNING and group is not None:
                    group.register_target(handle.host, handle.port)
                    record.registered.add(handle.task_id)
                    actions.append(f"register:{handle.task_id}")
                    self._event(service_id, "register", f"{handle.host}:{handle.port}")
            return actions

    def reconcile_all(self) -> dict[str, list[str]]:
        return {record.service_id: self.reconcile(record.service_id) for record in self.services()}

    def running_task_count(self, service_id: str) -> int:
        record = self.get(service_id)
        count = 0
        for handle in record.tasks:
            try:
                if self.backend.task_status(handle) is not TaskState.STOPPED:
                    count += 1
            except NoSuchTaskError:
                pass
        return count

    # -- in-task shutdown hook ---------------------------------------------------------

    def run_shutdown_hook(self, service_id: str, task: TaskHandle | str) -> None:
        """The application's exit sequence: lower the desired count (an API
        call that lands after its latency), then exit the task once the
        grace period passed. Skipping the hook and just exiting gets the
        task restarted by reconciliation instead."""
        record = self.get(service_id)
        now = self.clock.now()
        self.submit_desired_count(service_id, 0)

        def _exit() -> None:
            try:
                self.backend.kill_task(task)
            except (AlreadyStoppedError, NoSuchTaskError):
                pass

        self.clock.schedule(now + record.policy.shutdown_grace, _exit)
        self._event(service_id, "shutdown-hook", f"grace {record.policy.shutdown_grace:.0f}s")

    # -- internals ------------------------------------------------------------------------

    def _lock_for(self, service_id: str) -> threading.RLock:
        with self._table_lock:
            lock = self._locks.get(service_id)
        return lock if lock is not None else threading.RLock()

    def _event(self, service_id: str, event: str, detail: str = "") -> None:
        self.events.append(ServiceEvent(self.clock.now(), service_id, event, detail))
