"""Authenticating edge gateway: rules, targets, sessions, access log."""

from .accesslog import (
    OUTCOME_FAILURE,
    OUTCOME_NOT_REQUIRED,
    OUTCOME_SUCCESS,
    AccessLogRecord,
    JsonlAccessLog,
    MemoryAccessLog,
    read_records,
)
from .rules import (
    ActionKind,
    DuplicatePriorityError,
    ListenerRule,
    RoutingTable,
    RuleAction,
    match_request,
)
from .server import EdgeGateway, enforce_secure_transport
from .sessions import GatewaySessionStore, TestIdentityProvider, valid_user_id
from .targets import (
    TargetGroup,
    TargetGroupRegistry,
    TargetHealthState,
    run_health_checks,
)

__all__ = [
    "AccessLogRecord",
    "ActionKind",
    "DuplicatePriorityError",
    "EdgeGateway",
    "GatewaySessionStore",
    "JsonlAccessLog",
    "ListenerRule",
    "MemoryAccessLog",
    "OUTCOME_FAILURE",
    "OUTCOME_NOT_REQUIRED",
    "OUTCOME_SUCCESS",
    "RoutingTable",
    "RuleAction",
    "TargetGroup",
    "TargetGroupRegistry",
    "TargetHealthState",
    "TestIdentityProvider",
    "enforce_secure_transport",
    "match_request",
    "read_records",
    "run_health_checks",
    "valid_user_id",
]
