"""Egress-control generator and deployment auditor.

Emits the host firewall command set and the container proxy environment,
and checks a deployment description for the misconfigurations that turn
into vulnerabilities. Nothing here applies rules to a host; backend-sim
models their effect as a reachability predicate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

PROXY_ENV_KEYS = ("http_proxy", "https_proxy", "no_proxy")
VNC_INTERNAL_PORT = 5901


@dataclass(frozen=True)
class EgressConfig:
    external_interface: str = "eth0"
    bridge_interface: str = "docker0"
    bridge_gateway: str = "172.17.0.1"
    proxy_port: int = 8888
    metadata_address: str = "169.254.169.254"
    agent_address: str = "169.254.170.2"
    sink_port: int = 2

    def __post_init__(self) -> None:
        if self.proxy_port == self.sink_port:
            raise ValueError("proxy port must differ from the listenerless sink port")


def load_egress_config(path: str | Path) -> EgressConfig:
    """Read a flat key=value file mirroring EgressConfig fields."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in EgressConfig.__dataclass_fields__:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = int(value) if key.endswith("_port") else value
    return EgressConfig(**values)  # type: ignore[arg-type]


def emit_firewall_rules(cfg: EgressConfig = EgressConfig()) -> list[str]:
    """The four host firewall commands, in order: drop bridge->external,
    reject bridge->metadata, admit bridge->gateway:proxy-port, and route all
    remaining bridge->gateway traffic to the listenerless sink port.

    Layout (continuations and indents) is part of the output contract.
    """
    return [
        (
            f"iptables --insert DOCKER-USER --in-interface {cfg.bridge_interface} \\\n"
            f"   -o {cfg.external_interface} -j DROP"
        ),
        (
            "iptables --insert DOCKER-USER \\\n"
            f"   --destination {cfg.metadata_address} --jump REJECT \\\n"
            "   --reject-with icmp-port-unreachable"
        ),
        (
            f"iptables -t nat -A PREROUTING -i {cfg.bridge_interface} \\\n"
            f"   -d {cfg.bridge_gateway} -p tcp --dport {cfg.proxy_port} -j RETURN"
        ),
        (
            f"iptables -t nat -A PREROUTING -i {cfg.bridge_interface} \\\n"
            f"   -d {cfg.bridge_gateway} -p tcp -j DNAT --to-destination :{cfg.sink_port}"
        ),
    ]


def format_firewall_script(cfg: EgressConfig = EgressConfig()) -> str:
    """Render the command list with the reference grouping: the two filter
    rules separated by blank lines, the two NAT rules adjacent."""
    rules = emit_firewall_rules(cfg)
    return f"{rules[0]}\n\n{rules[1]}\n\n{rules[2]}\n{rules[3]}\n"


def emit_proxy_env(cfg: EgressConfig = EgressConfig()) -> list[str]:
    """The three container environment assignments forcing traffic through
    the host proxy, with the loopback, metadata and agent addresses exempt."""
    proxy_url = f"http://{cfg.bridge_gateway}:{cfg.proxy_port}/"
    return [
        f"http_proxy={proxy_url}",
        f"https_proxy={proxy_url}",
        f"no_proxy=localhost,127.0.0.1,{cfg.metadata_address},{cfg.agent_address}",
    ]


def proxy_env_map(cfg: EgressConfig = EgressConfig()) -> dict[str, str]:
    out = {}
    for line in emit_proxy_env(cfg):
        key, _, value = line.partition("=")
        out[key] = value
    return out


def format_proxy_env(cfg: EgressConfig = EgressConfig(), dockerfile: bool = False) -> str:
    """Plain env-file lines, or the Dockerfile block (ENV prefix and the
    reference line break inside no_proxy)."""
    lines = emit_proxy_env(cfg)
    if not dockerfile:
        return "\n".join(lines) + "\n"
    no_proxy = lines[2]
    head, _, tail = no_proxy.partition(f",{cfg.metadata_address}")
    return (
        f"ENV {lines[0]}\n"
        f"ENV {lines[1]}\n"
        f"ENV {head},\\\n{cfg.metadata_address}{tail}\n"
    )


@dataclass(frozen=True)
class Finding:
    rule: str
    subject: str
    message: str


@dataclass
class DeploymentDescription:
    """Normalized deployment facts the auditor checks.

    listeners: [{"scheme": "http"|"https", "redirects_to_https": bool}]
    roles: [{"id": str, "boundary_policy": str|None}]
    storage: [{"id": str, "encrypted": bool}]
    task_definitions: [{"id": str, "environment": {..}, "exposed_ports": [..], "kind": str|None}]
    log_sinks: [{"id": str, "allows_delete": bool}]
    """

    listeners: list[dict] = field(default_factory=list)
    roles: list[dict] = field(default_factory=list)
    storage: list[dict] = field(default_factory=list)
    task_definitions: list[dict] = field(default_factory=list)
    log_sinks: list[dict] = field(default_factory=list)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "DeploymentDescription":
        return cls(
            listeners=list(data.get("listeners", [])),
            roles=list(data.get("roles", [])),
            storage=list(data.get("storage", [])),
            task_definitions=list(data.get("task_definitions", [])),
            log_sinks=list(data.get("log_sinks", [])),
        )


def audit_deployment(desc: DeploymentDescription | Mapping) -> list[Finding]:
    """One finding per violated rule instance; empty list means conforming."""
    if not isinstance(desc, DeploymentDescription):
        desc = DeploymentDescription.from_mapping(desc)
    findings: list[Finding] = []

    for i, listener in enumerate(desc.listeners):
        if listener.get("scheme") == "http" and not listener.get("redirects_to_https"):
            findings.append(
                Finding("insecure-listener", f"listener[{i}]", "insecure listener does not redirect to HTTPS")
            )

    for role in desc.roles:
        if not role.get("boundary_policy"):
            findings.append(
                Finding("missing-boundary-policy", role.get("id", "?"), "role created without a boundary policy")
            )

    for volume in desc.storage:
        if not volume.get("encrypted"):
            findings.append(
                Finding("unencrypted-storage", volume.get("id", "?"), "persistent storage is not encrypted")
            )

    for td in desc.task_definitions:
        env = td.get("environment") or {}
        missing = [k for k in PROXY_ENV_KEYS if k not in env]
        if missing:
            findings.append(
                Finding(
                    "proxy-env-missing",
                    td.get("id", "?"),
                    f"task definition lacks proxy environment ({', '.join(missing)})",
                )
            )
        if td.get("kind") == "vnc" and VNC_INTERNAL_PORT in (td.get("exposed_ports") or []):
            findings.append(
                Finding(
                    "vnc-port-exposed",
                    td.get("id", "?"),
                    f"internal VNC port {VNC_INTERNAL_PORT} must not be exposed",
                )
            )

    for sink in desc.log_sinks:
        if sink.get("allows_delete"):
            findings.append(
                Finding("deletable-log-sink", sink.get("id", "?"), "log sink grants delete capability")
            )

    return findings
