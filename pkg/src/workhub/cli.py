"""Command-line entry points.

`workhub serve` boots the whole desk-scale platform (gateway, hub, key
server, simulated backend) from a YAML config. `harden` emits the egress
firewall commands and proxy environment, and audits deployment
descriptions.
"""

from __future__ import annotations

import argparse
import signal
import sys
import threading
from pathlib import Path

import yaml

from .hardening import (
    DeploymentDescription,
    EgressConfig,
    audit_deployment,
    format_firewall_script,
    format_proxy_env,
    load_egress_config,
)
from .lifecycle import CullPolicy
from .runtime import PlatformRuntime, RuntimeConfig


def load_serve_config(path: str | Path | None, access_log: str | Path | None = None) -> RuntimeConfig:
    data = {}
    if path is not None:
        data = yaml.safe_load(Path(path).read_text()) or {}
    config = RuntimeConfig()
    config.host = data.get("host", config.host)
    config.secure_port = int(data.get("secure_port", 8443))
    insecure = data.get("insecure_port", 8080)
    config.insecure_port = int(insecure) if insecure is not None else None
    if "users" in data:
        config.users = {str(k): str(v) for k, v in data["users"].items()}
    if data.get("templates_dir"):
        from .hub import load_templates_dir

        config.templates = load_templates_dir(data["templates_dir"])
    if data.get("shared_root"):
        config.shared_root = Path(data["shared_root"])
    config.signing_kid = data.get("signing_kid", config.signing_kid)
    config.token_ttl = float(data.get("token_ttl", config.token_ttl))
    config.session_idle_timeout = float(data.get("session_idle_timeout", config.session_idle_timeout))
    config.startup_delay = float(data.get("startup_delay", config.startup_delay))
    config.api_latency = float(data.get("api_latency", config.api_latency))
    config.health_check_interval = float(data.get("health_check_interval", config.health_check_interval))
    if "cull" in data:
        config.default_policy = CullPolicy(**{k: float(v) for k, v in data["cull"].items()})
    config.egress_allowlist = tuple(data.get("egress_allowlist", ()))
    config.static_targets = dict(data.get("static_targets", {}))
    config.extra_rules = tuple(data.get("rules", ()))
    if data.get("static_dir"):
        config.static_dir = Path(data["static_dir"])
    if access_log:
        config.access_log_path = Path(access_log)
    elif data.get("access_log"):
        config.access_log_path = Path(data["access_log"])
    return config


def serve(args: argparse.Namespace) -> int:
    config = load_serve_config(args.config, args.access_log)
    runtime = PlatformRuntime(config)
    runtime.run_background(interval=1.0)
    print(f"gateway (secure listener):   {runtime.base_url}")
    if runtime.insecure_url:
        print(f"gateway (insecure listener): {runtime.insecure_url} (redirects)")
    print(f"key server:                  {runtime.key_server.base_url}")
    print(f"shared storage root:         {runtime.shared_root}")
    print(f"users: {', '.join(runtime.idp.usernames())}")
    print("Ctrl-C to stop.")
    stop = threading.Event()
    signal.signal(signal.SIGINT, lambda *_: stop.set())
    signal.signal(signal.SIGTERM, lambda *_: stop.set())
    try:
        stop.wait()
    finally:
        runtime.shutdown()
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="workhub", description="Secure collaborative workspace platform.")
    sub = parser.add_subparsers(dest="command", required=True)

    serve_parser = sub.add_parser("serve", help="boot the platform")
    serve_parser.add_argument("--config", help="YAML config file", default=None)
    serve_parser.add_argument("--access-log", help="append-only JSONL access log path", default=None)
    serve_parser.set_defaults(fn=serve)

    args = parser.parse_args(argv)
    return args.fn(args)


def _egress_config(path: str | None) -> EgressConfig:
    return load_egress_config(path) if path else EgressConfig()


def harden_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="harden", description="Egress hardening tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    firewall = sub.add_parser("emit-firewall", help="print the host firewall command set")
    firewall.add_argument("--config", default=None, help="flat key=value egress config")

    env = sub.add_parser("emit-env", help="print the container proxy environment")
    env.add_argument("--config", default=None)
    env.add_argument("--dockerfile", action="store_true", help="Dockerfile ENV form")

    audit = sub.add_parser("audit", help="audit a deployment description")
    audit.add_argument("description", help="YAML/JSON deployment description file")

    args = parser.parse_args(argv)
    if args.command == "emit-firewall":
        sys.stdout.write(format_firewall_script(_egress_config(args.config)))
        return 0
    if args.command == "emit-env":
        sys.stdout.write(format_proxy_env(_egress_config(args.config), dockerfile=args.dockerfile))
        return 0
    if args.command == "audit":
        data = yaml.safe_load(Path(args.description).read_text()) or {}
        findings = audit_deployment(DeploymentDescription.from_mapping(data))
        for finding in findings:
            print(f"{finding.rule}\t{finding.subject}\t{finding.message}")
        if findings:
            print(f"{len(findings)} finding(s)", file=sys.stderr)
            return 1
        print("no findings", file=sys.stderr)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
