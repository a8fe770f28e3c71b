"""The pluggable container-backend surface.

Everything the rest of the platform needs from a container runtime is
here: run a task from a definition, stop it, ask its state. A real cloud
backend would implement the same three calls; only the in-memory
simulation ships.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Protocol


class TaskState(str, Enum):
    PROVISIONING = "provisioning"
    RUNNING = "running"
    STOPPED = "stopped"


@dataclass(frozen=True)
class TaskDefinitionRecord:
    """Recipe for one container task."""

    image: str
    container_port: int
    environment: Mapping[str, str] = field(default_factory=dict)
    mounts: Mapping[str, str] = field(default_factory=dict)  # container path -> host path
    command_override: tuple[str, ...] | None = None
    log_stream: str = ""


@dataclass
class TaskHandle:
    """One running (or stopped) container instance.

    (host, port) is unique among live tasks; state only ever moves
    provisioning -> running -> stopped.
    """

    task_id: str
    host: str
    port: int
    state: TaskState
    started_at: float


class BackendError(Exception):
    pass


class PortExhaustionError(BackendError):
    pass


class UnknownImageError(BackendError):
    pass


class AlreadyStoppedError(BackendError):
    pass


class NoSuchTaskError(BackendError):
    pass


class ContainerBackend(Protocol):
    def run_task(self, definition: TaskDefinitionRecord) -> TaskHandle: ...

    def stop_task(self, task: TaskHandle | str) -> None: ...

    def task_status(self, task: TaskHandle | str) -> TaskState: ...
