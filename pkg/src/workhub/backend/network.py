"""Reachability model for the host egress controls.

Evaluates what the four firewall rules plus the allowlisting proxy would do
to a connection attempt from inside a container, given the container's
environment. Misconfiguration (missing proxy variables) loses access; it
never opens a route.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping
from urllib.parse import urlsplit

from ..hardening import EgressConfig

LOOPBACK_HOSTS = frozenset({"localhost", "127.0.0.1"})


@dataclass(frozen=True)
class EgressResult:
    reachable: bool
    route: str  # loopback | direct | proxy | proxy-endpoint | nat-sink
    reason: str


def _split_destination(destination: str) -> tuple[str, int | None]:
    host, sep, port = destination.partition(":")
    return host, int(port) if sep else None


class SimulatedEgress:
    """Shared network model consulted by the container backend."""

    def __init__(
        self,
        cfg: EgressConfig = EgressConfig(),
        allowlist: Iterable[str] = (),
    ) -> None:
        self.cfg = cfg
        self.allowlist = set(allowlist)

    def allow(self, host: str) -> None:
        self.allowlist.add(host)

    def attempt(self, env: Mapping[str, str], destination: str) -> EgressResult:
        cfg = self.cfg
        host, port = _split_destination(destination)

        if host in LOOPBACK_HOSTS:
            return EgressResult(True, "loopback", "traffic never leaves the container")

        if host == cfg.bridge_gateway:
            if port == cfg.proxy_port:
                return EgressResult(True, "proxy-endpoint", "admitted by the NAT RETURN rule")
            return EgressResult(
                False, "nat-sink", f"DNAT to port {cfg.sink_port}, which has no listener"
            )

        proxy = env.get("http_proxy") or env.get("https_proxy")
        no_proxy = {h.strip() for h in env.get("no_proxy", "").split(",") if h.strip()}
        direct = proxy is None or host in no_proxy

        if direct:
            if host == cfg.metadata_address:
                return EgressResult(
                    False, "direct", "metadata address rejected (icmp-port-unreachable)"
                )
            if host == cfg.agent_address:
                return EgressResult(True, "direct", "backend agent is reachable on-host")
            return EgressResult(
                False,
                "direct",
                f"{cfg.bridge_interface}->{cfg.external_interface} traffic dropped",
            )

        split = urlsplit(proxy)
        if split.hostname != cfg.bridge_gateway or (split.port or 80) != cfg.proxy_port:
            return EgressResult(False, "proxy", f"proxy endpoint {proxy!r} is not reachable")
        if host in self.allowlist:
            return EgressResult(True, "proxy", "destination allowlisted at the proxy")
        return EgressResult(False, "proxy", "destination denied by the proxy allowlist")
