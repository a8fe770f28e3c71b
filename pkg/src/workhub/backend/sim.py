"""In-memory container backend: real localhost servers for the simulated
apps, a managed host-port pool, lazy provisioning->running transitions on
the injected clock, and crash injection for restart tests.
"""

from __future__ import annotations

import itertools
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..clock import Clock
from ..httpd import AppServer
from .apps import DEFAULT_IMAGES, AppFactory, TaskContext
from .interface import (
    AlreadyStoppedError,
    NoSuchTaskError,
    PortExhaustionError,
    TaskDefinitionRecord,
    TaskHandle,
    TaskState,
    UnknownImageError,
)
from .network import EgressResult, SimulatedEgress

DEFAULT_STARTUP_DELAY = 0.5


@dataclass
class _TaskRecord:
    handle: TaskHandle
    definition: TaskDefinitionRecord
    server: AppServer
    context: TaskContext
    running_at: float
    crashed: bool = False


@dataclass(frozen=True)
class PortProbe:
    allowed: bool
    reason: str


class InMemoryBackend:
    """Simulated container runtime behind the ContainerBackend surface."""

    def __init__(
        self,
        clock: Clock,
        apps: Mapping[str, AppFactory] | None = None,
        host: str = "127.0.0.1",
        port_range: tuple[int, int] = (41000, 41255),
        startup_delay: float = DEFAULT_STARTUP_DELAY,
        extra_env: Mapping[str, str] | None = None,
        egress: SimulatedEgress | None = None,
        fs_root: str | Path | None = None,
    ) -> None:
        self.clock = clock
        self.apps = dict(apps) if apps is not None else dict(DEFAULT_IMAGES)
        self.host = host
        self.port_range = port_range
        self.startup_delay = startup_delay
        self.extra_env = dict(extra_env or {})
        self.egress = egress or SimulatedEgress()
        self._fs_root = Path(fs_root) if fs_root else Path(tempfile.mkdtemp(prefix="workhub-tasks-"))
        self._fs_root.mkdir(parents=True, exist_ok=True)
        self._tasks: dict[str, _TaskRecord] = {}
        self._ports_in_use: set[int] = set()
        self._ids = itertools.count(1)
        self._lock = threading.RLock()

    # -- ContainerBackend surface -------------------------------------------

    def run_task(self, definition: TaskDefinitionRecord) -> TaskHandle:
        factory = self.apps.get(definition.image)
        if factory is None:
            raise UnknownImageError(f"no such image {definition.image!r}")
        with self._lock:
            task_id = f"task-{next(self._ids):05d}"
            env = {**self.extra_env, **dict(definition.environment)}
            private_dir = self._fs_root / task_id
            private_dir.mkdir(parents=True, exist_ok=True)
            server, context = self._bind_app(factory, task_id, definition, env, private_dir)
            now = self.clock.now()
            handle = TaskHandle(
                task_id=task_id,
                host=self.host,
                port=context.port,
                state=TaskState.PROVISIONING,
                started_at=now,
            )
            self._tasks[task_id] = _TaskRecord(
                handle=handle,
                definition=definition,
                server=server,
                context=context,
                running_at=now + self.startup_delay,
            )
            return handle

    def stop_task(self, task: TaskHandle | str) -> None:
        with self._lock:
            record = self._record(task)
            if record.handle.state is TaskState.STOPPED:
                raise AlreadyStoppedError(record.handle.task_id)
            self._terminate(record, crashed=False)

    def kill_task(self, task: TaskHandle | str) -> None:
        """Abrupt termination (crash or in-task exit); no count change."""
        with self._lock:
            record = self._record(task)
            if record.handle.state is TaskState.STOPPED:
                raise AlreadyStoppedError(record.handle.task_id)
            self._terminate(record, crashed=True)

    def task_status(self, task: TaskHandle | str) -> TaskState:
        with self._lock:
            record = self._record(task)
            handle = record.handle
            if handle.state is TaskState.PROVISIONING and self.clock.now() >= record.running_at:
                handle.state = TaskState.RUNNING
            return handle.state

    # -- simulation extras ---------------------------------------------------

    def attempt_egress(self, task: TaskHandle | str, destination: str) -> EgressResult:
        with self._lock:
            record = self._record(task)
        return self.egress.attempt(record.context.environment, destination)

    def probe_container_port(self, task: TaskHandle | str, container_port: int) -> PortProbe:
        """Outside view of the task's ports: only the mapped container port
        is published; everything else is refused."""
        with self._lock:
            record = self._record(task)
        if container_port == record.definition.container_port:
            return PortProbe(True, f"published on host port {record.handle.port}")
        return PortProbe(False, f"container port {container_port} is not exposed")

    def live_tasks(self) -> list[TaskHandle]:
        with self._lock:
            return [r.handle for r in self._tasks.values() if r.handle.state is not TaskState.STOPPED]

    def used_port_count(self) -> int:
        with self._lock:
            return len(self._ports_in_use)

    def task_context(self, task: TaskHandle | str) -> TaskContext:
        with self._lock:
            return self._record(task).context

    def shutdown(self) -> None:
        with self._lock:
            for record in list(self._tasks.values()):
                if record.handle.state is not TaskState.STOPPED:
                    self._terminate(record, crashed=False)

    # -- internals -----------------------------------------------------------

    def _record(self, task: TaskHandle | str) -> _TaskRecord:
        task_id = task.task_id if isinstance(task, TaskHandle) else task
        record = self._tasks.get(task_id)
        if record is None:
            raise NoSuchTaskError(task_id)
        return record

    def _bind_app(
        self, factory: AppFactory, task_id: str, definition: TaskDefinitionRecord, env: dict, private_dir: Path
    ) -> tuple[AppServer, TaskContext]:
        lo, hi = self.port_range
        for port in range(lo, hi + 1):
            if port in self._ports_in_use:
                continue
            context = TaskContext(
                task_id=task_id,
                environment=env,
                mounts=dict(definition.mounts),
                host=self.host,
                port=port,
                private_dir=private_dir,
                clock=self.clock,
            )
            try:
                server = AppServer(factory(context), host=self.host, port=port)
            except OSError:
                continue  # foreign process owns it; try the next one
            self._ports_in_use.add(port)
            return server, context
        raise PortExhaustionError(f"no free ports in {lo}-{hi}")

    def _terminate(self, record: _TaskRecord, crashed: bool) -> None:
        record.server.shutdown()
        record.handle.state = TaskState.STOPPED
        record.crashed = crashed
        self._ports_in_use.discard(record.handle.port)
