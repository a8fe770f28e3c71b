"""Pluggable container-backend interface and the in-memory simulation."""

from .apps import DEFAULT_IMAGES, TaskContext
from .interface import (
    AlreadyStoppedError,
    BackendError,
    ContainerBackend,
    NoSuchTaskError,
    PortExhaustionError,
    TaskDefinitionRecord,
    TaskHandle,
    TaskState,
    UnknownImageError,
)
from .network import EgressResult, SimulatedEgress
from .sim import InMemoryBackend, PortProbe

__all__ = [
    "AlreadyStoppedError",
    "BackendError",
    "ContainerBackend",
    "DEFAULT_IMAGES",
    "EgressResult",
    "InMemoryBackend",
    "NoSuchTaskError",
    "PortExhaustionError",
    "PortProbe",
    "SimulatedEgress",
    "TaskContext",
    "TaskDefinitionRecord",
    "TaskHandle",
    "TaskState",
    "UnknownImageError",
]
