"""The control plane: per-(user, application) resource stacks and the
three-circumstance connect flow.

A stack bundles five resources: IAM-style role (boundary policy attached),
gateway listener rule, target group, rendered task definition, and the
service. Stacks are created and deleted atomically from any observer's
view: the shared registries are only touched while holding the store lock,
and a failure mid-creation unwinds everything already made.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

from ..clock import Clock
from ..gateway.rules import ListenerRule, RoutingTable, RuleAction
from ..gateway.targets import TargetGroupRegistry
from ..lifecycle import CullPolicy, ServiceRegistry
from .provision import Provisioner, StorageFailureError
from .templates import (
    StackTemplate,
    render_health_check_path,
    render_task_definition,
    validate_user_id,
)

DEFAULT_RULE_PRIORITY_BASE = 100


class UnknownApplicationError(Exception):
    pass


class IdentityMismatchError(Exception):
    pass


class StackExistsError(Exception):
    pass


class NoSuchStackError(Exception):
    pass


class BackendFailureError(Exception):
    pass


@dataclass(frozen=True)
class RoleRecord:
    role_id: str
    policy_document: Mapping[str, object]
    boundary_policy: str


@dataclass
class WorkspaceStack:
    user: str
    app: str
    task_definition_id: str
    listener_rule_id: str
    target_group_id: str
    service_id: str
    role_id: str
    state: str = "active"  # active | deleting

    @property
    def open_path(self) -> str:
        return f"/{self.user}/{self.app}"


@dataclass(frozen=True)
class ConnectOutcome:
    kind: str  # redirect-now | starting | provisioning-then-starting
    url: str


@dataclass(frozen=True)
class InventorySnapshot:
    stacks: int
    roles: int
    task_definitions: int
    rules: int
    target_groups: int
    services: int
    live_tasks: int
    used_ports: int


CARD_NOT_PROVISIONED = "not-provisioned"
CARD_STARTING = "starting"
CARD_RUNNING = "running"
CARD_CULLED = "culled"
CARD_DELETING = "deleting"


class ControlPlane:
    def __init__(
        self,
        clock: Clock,
        templates: Mapping[str, StackTemplate],
        routing: RoutingTable,
        target_groups: TargetGroupRegistry,
        services: ServiceRegistry,
        backend,
        provisioner: Provisioner,
        shared_root: str | Path,
        default_policy: CullPolicy | None = None,
        rule_priority_base: int = DEFAULT_RULE_PRIORITY_BASE,
        health_check_interval: float | None = None,
        task_extra_env: Mapping[str, str] | None = None,
    ) -> None:
        self.clock = clock
        self.templates = dict(templates)
        self.routing = routing
        self.target_groups = target_groups
        self.services = services
        self.backend = backend
        self.provisioner = provisioner
        self.shared_root = Path(shared_root)
        self.default_policy = default_policy or CullPolicy()
        self.health_check_interval = health_check_interval
        self.task_extra_env = dict(task_extra_env or {})

        self._stacks: dict[tuple[str, str], WorkspaceStack] = {}
        self._roles: dict[str, RoleRecord] = {}
        self._task_defs: dict[str, object] = {}
        self._group_to_service: dict[str, str] = {}
        self._store_lock = threading.RLock()
        self._stack_locks: dict[tuple[str, str], threading.RLock] = {}
        self._next_priority = rule_priority_base

    # -- lookups -----------------------------------------------------------------

    def stack_for(self, user: str, app: str) -> WorkspaceStack | None:
        with self._store_lock:
            return self._stacks.get((user, app))

    def stacks(self) -> list[WorkspaceStack]:
        with self._store_lock:
            return list(self._stacks.values())

    def service_for_group(self, group_id: str) -> str | None:
        with self._store_lock:
            return self._group_to_service.get(group_id)

    def record_activity_for_group(self, group_id: str) -> None:
        """Gateway forward hook: any proxied request bumps the service's
        idle clock."""
        service_id = self.service_for_group(group_id)
        if service_id is not None:
            try:
                self.services.record_activity(service_id, self.clock.now())
            except Exception:
                pass

    # -- connect ------------------------------------------------------------------

    def connect(self, user: str, app: str, verified_user: str) -> ConnectOutcome:
        """Circumstance 1: running -> redirect. Circumstance 2: culled ->
        raise the count. Circumstance 3: first use -> build the stack,
        provision the home if absent, raise the count."""
        if user != verified_user:
            raise IdentityMismatchError(f"{verified_user!r} may not connect as {user!r}")
        template = self.templates.get(app)
        if template is None:
            raise UnknownApplicationError(app)
        validate_user_id(user)
        poll_url = f"/api/poll/{app}"

        with self._stack_lock(user, app):
            stack = self.stack_for(user, app)
            if stack is None:
                stack = self._instantiate_locked(user, app, template)
                try:
                    if not self.provisioner.is_provisioned(user):
                        self.provisioner.provision(user, template.starter_files)
                except StorageFailureError as exc:
                    self._delete_stack_resources(stack)
                    raise BackendFailureError(f"home provisioning failed: {exc}") from exc
                self.services.set_desired_count(stack.service_id, 1)
                return ConnectOutcome("provisioning-then-starting", poll_url)

            service = self.services.get(stack.service_id)
            if service.desired_count == 0:
                self.services.set_desired_count(stack.service_id, 1)
                return ConnectOutcome("starting", poll_url)
            if self._traffic_ready(stack):
                return ConnectOutcome("redirect-now", stack.open_path)
            return ConnectOutcome("starting", poll_url)

    # -- stack lifecycle -------------------------------------------------------------

    def instantiate_stack(self, user: str, app: str, template: StackTemplate | None = None) -> WorkspaceStack:
        template = template or self.templates.get(app)
        if template is None:
            raise UnknownApplicationError(app)
        validate_user_id(user)
        with self._stack_lock(user, app):
            return self._instantiate_locked(user, app, template)

    def decommission(self, user: str, app: str, verified_user: str) -> None:
        """Stop the task, remove all five resources and the gateway rule.
        The home directory is retained."""
        if user != verified_user:
            raise IdentityMismatchError(f"{verified_user!r} may not decommission {user!r}'s workspace")
        with self._stack_lock(user, app):
            stack = self.stack_for(user, app)
            if stack is None:
                raise NoSuchStackError(f"{user}/{app}")
            stack.state = "deleting"
            self._delete_stack_resources(stack)

    # -- state for the UI ---------------------------------------------------------------

    def workspace_card(self, user: str, app: str) -> dict:
        template = self.templates.get(app)
        if template is None:
            raise UnknownApplicationError(app)
        card: dict = {
            "application": app,
            "display_name": template.display_name,
            "state": CARD_NOT_PROVISIONED,
            "open_url": None,
            "last_activity": None,
        }
        stack = self.stack_for(user, app)
        if stack is None:
            return card
        if stack.state == "deleting":
            card["state"] = CARD_DELETING
            return card
        service = self.services.get(stack.service_id)
        card["last_activity"] = service.last_activity
        if service.desired_count == 0:
            card["state"] = CARD_CULLED
        elif self._traffic_ready(stack):
            card["state"] = CARD_RUNNING
            card["open_url"] = stack.open_path
        else:
            card["state"] = CARD_STARTING
        return card

    def workspaces(self, user: str) -> list[dict]:
        return [self.workspace_card(user, app) for app in sorted(self.templates)]

    def poll(self, user: str, app: str) -> dict:
        card = self.workspace_card(user, app)
        return {"state": card["state"], "open_url": card["open_url"]}

    # -- inventory -------------------------------------------------------------------------

    def inventory(self) -> InventorySnapshot:
        with self._store_lock:
            return InventorySnapshot(
                stacks=len(self._stacks),
                roles=len(self._roles),
                task_definitions=len(self._task_defs),
                rules=len(self.routing),
                target_groups=len(self.target_groups),
                services=len(self.services),
                live_tasks=len(self.backend.live_tasks()),
                used_ports=self.backend.used_port_count(),
            )

    def roles(self) -> list[RoleRecord]:
        with self._store_lock:
            return list(self._roles.values())

    # -- internals ----------------------------------------------------------------------------

    def _traffic_ready(self, stack: WorkspaceStack) -> bool:
        if self.services.running_task_count(stack.service_id) < 1:
            return False
        group = self.target_groups.get(stack.target_group_id)
        return group is not None and bool(group.healthy_targets())

    def _stack_lock(self, user: str, app: str) -> threading.RLock:
        with self._store_lock:
            return self._stack_locks.setdefault((user, app), threading.RLock())

    def _allocate_priority(self) -> int:
        priority = self._next_priority
        self._next_priority += 1
        return priority

    def _policy_for(self, template: StackTemplate) -> CullPolicy:
        if not template.cull_overrides:
            return self.default_policy
        return replace(self.default_policy, **dict(template.cull_overrides))

    def _instantiate_locked(self, user: str, app: str, template: StackTemplate) -> WorkspaceStack:
        if (user, app) in self._stacks:
            raise StackExistsError(f"{user}/{app}")
        role_id = f"role-{user}-{app}"
        group_id = f"tg-{user}-{app}"
        rule_id = f"rule-{user}-{app}"
        service_id = f"svc-{user}-{app}"
        task_def_id = f"td-{user}-{app}"

        with self._store_lock:
            created: list = []  # (kind, undo) pairs, unwound on failure
            try:
                task_def = render_task_definition(template, user, self.shared_root, self.task_extra_env)
                health_path = render_health_check_path(template, user)
                kwargs = {}
                if self.health_check_interval is not None:
                    kwargs["check_interval"] = self.health_check_interval
                self.target_groups.create(group_id, health_path, template.expected_status, **kwargs)
                created.append(lambda: self.target_groups.remove(group_id))

                rule = ListenerRule(
                    rule_id=rule_id,
                    priority=self._allocate_priority(),
                    path_pattern=f"/{user}/{app}*",
                    action=RuleAction.authenticate_then_forward(group_id),
                )
                self.routing.add(rule)
                created.append(lambda: self.routing.remove(rule_id))

                self.services.create_service(
                    service_id,
                    stack_ref=f"{user}/{app}",
                    task_definition=task_def,
                    target_group_id=group_id,
                    policy=self._policy_for(template),
                )
                created.append(lambda: self.services.delete_service(service_id))

                self._roles[role_id] = RoleRecord(
                    role_id, template.role_policy.document, template.role_policy.boundary_policy
                )
                created.append(lambda: self._roles.pop(role_id, None))
                self._task_defs[task_def_id] = task_def

                stack = WorkspaceStack(
                    user=user,
                    app=app,
                    task_definition_id=task_def_id,
                    listener_rule_id=rule_id,
                    target_group_id=group_id,
                    service_id=service_id,
                    role_id=role_id,
                )
                self._stacks[(user, app)] = stack
                self._group_to_service[group_id] = service_id
                return stack
            except StackExistsError:
                raise
            except Exception as exc:
                for undo in reversed(created):
                    try:
                        undo()
                    except Exception:
                        pass
                raise BackendFailureError(f"stack creation for {user}/{app} failed: {exc}") from exc

    def _delete_stack_resources(self, stack: WorkspaceStack) -> None:
        with self._store_lock:
            self.services.delete_service(stack.service_id)
            self.routing.remove(stack.listener_rule_id)
            self.target_groups.remove(stack.target_group_id)
            self._roles.pop(stack.role_id, None)
            self._task_defs.pop(stack.task_definition_id, None)
            self._group_to_service.pop(stack.target_group_id, None)
            self._stacks.pop((stack.user, stack.app), None)
