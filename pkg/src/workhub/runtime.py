"""Desk-scale assembly of the whole platform.

Boots the key server, container backend, service registry, control plane,
hub, and edge gateway against one clock. Tests drive time with tick() and
a VirtualClock; the serve CLI runs the same loop on a background thread
with the system clock.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path
from tempfile import mkdtemp

from .auth import HttpKeyProvider, InMemoryKeyProvider, KeyServer, generate_signing_key, public_key_pem
from .backend import InMemoryBackend, SimulatedEgress
from .clock import Clock, SystemClock, VirtualClock
from .gateway import (
    EdgeGateway,
    GatewaySessionStore,
    JsonlAccessLog,
    ListenerRule,
    MemoryAccessLog,
    RoutingTable,
    RuleAction,
    TargetGroupRegistry,
    TestIdentityProvider,
    run_health_checks,
)
from .hardening import EgressConfig
from .hub import ControlPlane, HubApp, Provisioner, StackTemplate, builtin_templates
from .httpd import AppServer
from .lifecycle import CullPolicy, MemoryEventSink, ServiceRegistry

HUB_TARGET_GROUP = "tg-hub"
RULE_PRIORITY_APP_SHELL = 10
RULE_PRIORITY_API = 11
RULE_PRIORITY_CATCH_ALL = 9999


@dataclass
class RuntimeConfig:
    users: dict[str, str] = field(default_factory=lambda: {"alice": "alice-password"})
    templates: dict[str, StackTemplate] | None = None
    shared_root: str | Path | None = None
    signing_kid: str = "gateway-key-1"
    token_ttl: float = 300.0
    session_idle_timeout: float = 8 * 3600.0
    startup_delay: float = 0.5
    port_range: tuple[int, int] = (41000, 41511)
    api_latency: float = 1.0
    default_policy: CullPolicy = field(default_factory=CullPolicy)
    health_check_interval: float = 10.0
    egress_config: EgressConfig = field(default_factory=EgressConfig)
    egress_allowlist: tuple[str, ...] = ()
    static_dir: str | Path | None = None
    access_log_path: str | Path | None = None
    host: str = "127.0.0.1"
    secure_port: int = 0
    insecure_port: int | None = 0
    # declarative gateway extras: {group_id: {health_check_path, expected_status, targets: ["h:p", ...]}}
    static_targets: dict = field(default_factory=dict)
    # [{id, priority, path, action, target_group, host}, ...]
    extra_rules: tuple = ()


class _FanoutSink:
    def __init__(self, sinks) -> None:
        self.sinks = list(sinks)

    def append(self, record) -> None:
        for sink in self.sinks:
            sink.append(record)


class PlatformRuntime:
    def __init__(self, config: RuntimeConfig | None = None, clock: Clock | None = None) -> None:
        self.config = config or RuntimeConfig()
        self.clock = clock or SystemClock()
        cfg = self.config

        self.shared_root = Path(cfg.shared_root) if cfg.shared_root else Path(mkdtemp(prefix="workhub-storage-"))
        self.shared_root.mkdir(parents=True, exist_ok=True)

        # key distribution: the gateway signs, workspaces and hub verify
        self.key_registry = InMemoryKeyProvider()
        self.key_server = KeyServer(self.key_registry, host=cfg.host)
        self.signing_key = generate_signing_key()
        self.key_registry.register(cfg.signing_kid, public_key_pem(self.signing_key))

        self.routing = RoutingTable()
        self.target_groups = TargetGroupRegistry()
        self.sessions = GatewaySessionStore(idle_timeout=cfg.session_idle_timeout)
        self.idp = TestIdentityProvider(cfg.users)

        self.access_log = MemoryAccessLog()
        sinks = [self.access_log]
        self._file_log: JsonlAccessLog | None = None
        if cfg.access_log_path:
            self._file_log = JsonlAccessLog(cfg.access_log_path)
            sinks.append(self._file_log)

        self.egress = SimulatedEgress(cfg.egress_config, allowlist=cfg.egress_allowlist)
        self.backend = InMemoryBackend(
            self.clock,
            host=cfg.host,
            port_range=cfg.port_range,
            startup_delay=cfg.startup_delay,
            extra_env={"KEY_SERVER_BASE": self.key_server.base_url},
            egress=self.egress,
        )
        self.events = MemoryEventSink()
        self.services = ServiceRegistry(
            self.clock, self.backend, self.target_groups, events=self.events, api_latency=cfg.api_latency
        )
        self.provisioner = Provisioner(self.shared_root)
        self.templates = dict(cfg.templates) if cfg.templates is not None else builtin_templates()
        self.control_plane = ControlPlane(
            self.clock,
            self.templates,
            self.routing,
            self.target_groups,
            self.services,
            self.backend,
            self.provisioner,
            self.shared_root,
            default_policy=cfg.default_policy,
            health_check_interval=cfg.health_check_interval,
        )

        key_client = HttpKeyProvider(self.key_server.base_url)
        self.hub_app = HubApp(self.control_plane, self.clock, key_client, static_dir=cfg.static_dir)
        self.hub_server = AppServer(self.hub_app, host=cfg.host)

        hub_group = self.target_groups.create(
            HUB_TARGET_GROUP, "/ping", {200}, check_interval=cfg.health_check_interval
        )
        hub_group.register_target(cfg.host, self.hub_server.port)
        self.routing.add(
            ListenerRule("rule-hub-shell", RULE_PRIORITY_APP_SHELL, "/app*",
                         RuleAction.authenticate_then_forward(HUB_TARGET_GROUP))
        )
        self.routing.add(
            ListenerRule("rule-hub-api", RULE_PRIORITY_API, "/api/*",
                         RuleAction.authenticate_then_forward(HUB_TARGET_GROUP))
        )
        self.routing.add(
            ListenerRule("rule-hub-public", RULE_PRIORITY_CATCH_ALL, "/*",
                         RuleAction.public_forward(HUB_TARGET_GROUP))
        )
        self._install_declared_extras(cfg)

        self.gateway = EdgeGateway(
            self.clock,
            self.routing,
            self.target_groups,
            self.sessions,
            self.idp,
            self.signing_key,
            cfg.signing_kid,
            _FanoutSink(sinks),
            token_ttl=cfg.token_ttl,
            on_forward=self.control_plane.record_activity_for_group,
        )
        self.gateway.start(host=cfg.host, secure_port=cfg.secure_port, insecure_port=cfg.insecure_port)

        self._pump_thread: threading.Thread | None = None
        self._stop = threading.Event()

    def _install_declared_extras(self, cfg: RuntimeConfig) -> None:
        """Statically configured target groups and listener rules (beyond
        the hub's own and the per-stack dynamic ones)."""
        for group_id, spec in cfg.static_targets.items():
            group = self.target_groups.create(
                group_id,
                spec.get("health_check_path", "/"),
                spec.get("expected_status", [200]),
                check_interval=cfg.health_check_interval,
            )
            for target in spec.get("targets", []):
                host, _, port = str(target).partition(":")
                group.register_target(host, int(port))
        actions = {
            "authenticate-then-forward": RuleAction.authenticate_then_forward,
            "forward": RuleAction.forward,
            "public-forward": RuleAction.public_forward,
        }
        for entry in cfg.extra_rules:
            kind = str(entry.get("action", "forward")).replace("_", "-")
            if kind == "redirect-to-secure":
                action = RuleAction.redirect_to_secure()
            else:
                action = actions[kind](entry.get("target_group"))
            self.routing.add(
                ListenerRule(
                    rule_id=entry.get("id") or f"rule-extra-{entry['priority']}",
                    priority=int(entry["priority"]),
                    path_pattern=entry.get("path", "/*"),
                    action=action,
                    host_pattern=entry.get("host"),
                )
            )

    # -- addresses ---------------------------------------------------------------

    @property
    def base_url(self) -> str:
        """The secure listener (plaintext transport, https logically)."""
        return f"http://{self.config.host}:{self.gateway.secure_port}"

    @property
    def insecure_url(self) -> str | None:
        port = self.gateway.insecure_port
        return f"http://{self.config.host}:{port}" if port else None

    # -- time & convergence ---------------------------------------------------------

    def tick(self, dt: float = 1.0) -> None:
        """One supervision step: advance time (firing scheduled effects),
        reconcile every service, run due health checks, cull scan."""
        if isinstance(self.clock, VirtualClock):
            self.clock.advance(dt)
        else:
            self.clock.fire_due()
        self.services.reconcile_all()
        run_health_checks(self.target_groups, self.clock.now())
        self.services.cull_scan(self.clock.now())

    def pump_until(self, predicate, step: float = 1.0, max_steps: int = 600) -> bool:
        for _ in range(max_steps):
            if predicate():
                return True
            self.tick(step)
        return predicate()

    def wait_hub_healthy(self) -> None:
        group = self.target_groups.get(HUB_TARGET_GROUP)
        assert group is not None
        if not self.pump_until(lambda: bool(group.healthy_targets()), step=self.config.health_check_interval):
            raise RuntimeError("hub never became healthy")

    def workspace_running(self, user: str, app: str) -> bool:
        stack = self.control_plane.stack_for(user, app)
        if stack is None:
            return False
        group = self.target_groups.get(stack.target_group_id)
        return group is not None and bool(group.healthy_targets())

    # -- serve mode -------------------------------------------------------------------

    def run_background(self, interval: float = 1.0) -> None:
        def loop() -> None:
            while not self._stop.wait(interval):
                try:
                    self.tick(interval)
                except Exception:
                    pass

        self._pump_thread = threading.Thread(target=loop, daemon=True)
        self._pump_thread.start()

    def shutdown(self) -> None:
        self._stop.set()
        if self._pump_thread is not None:
            self._pump_thread.join(timeout=2.0)
        self.gateway.shutdown()
        self.hub_server.shutdown()
        self.backend.shutdown()
        self.key_server.shutdown()
        if self._file_log is not None:
            self._file_log.close()
