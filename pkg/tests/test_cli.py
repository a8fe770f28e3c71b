"""CLI surfaces: harden subcommands and serve configuration."""

from __future__ import annotations

import time

import yaml

from workhub.cli import harden_main, load_serve_config
from workhub.runtime import PlatformRuntime

from .test_hardening import GOLDEN, conforming_description
from .webclient import BrowserClient


class TestHardenCli:
    def test_emit_firewall_matches_golden(self, capsys):
        assert harden_main(["emit-firewall"]) == 0
        assert capsys.readouterr().out == (GOLDEN / "firewall_default.txt").read_text()

    def test_emit_env_matches_golden(self, capsys):
        assert harden_main(["emit-env"]) == 0
        assert capsys.readouterr().out == (GOLDEN / "proxy_env_default.txt").read_text()

    def test_emit_env_dockerfile_form(self, capsys):
        assert harden_main(["emit-env", "--dockerfile"]) == 0
        assert capsys.readouterr().out == (GOLDEN / "proxy_env_dockerfile.txt").read_text()

    def test_emit_firewall_with_config(self, capsys, tmp_path):
        cfg = tmp_path / "egress.conf"
        cfg.write_text("proxy_port=3128\n")
        assert harden_main(["emit-firewall", "--config", str(cfg)]) == 0
        assert "--dport 3128" in capsys.readouterr().out

    def test_audit_clean_exits_zero(self, capsys, tmp_path):
        desc = tmp_path / "deploy.yaml"
        desc.write_text(yaml.safe_dump(conforming_description()))
        assert harden_main(["audit", str(desc)]) == 0

    def test_audit_findings_exit_nonzero(self, capsys, tmp_path):
        data = conforming_description()
        data["listeners"].append({"scheme": "http", "redirects_to_https": False})
        data["storage"][0]["encrypted"] = False
        desc = tmp_path / "deploy.yaml"
        desc.write_text(yaml.safe_dump(data))
        assert harden_main(["audit", str(desc)]) == 1
        out = capsys.readouterr().out
        assert "insecure-listener" in out
        assert "unencrypted-storage" in out


class TestServeConfig:
    def test_defaults_without_file(self):
        config = load_serve_config(None)
        assert config.secure_port == 8443
        assert config.insecure_port == 8080
        assert "alice" in config.users

    def test_full_file(self, tmp_path):
        path = tmp_path / "serve.yaml"
        path.write_text(
            yaml.safe_dump(
                {
                    "host": "127.0.0.1",
                    "secure_port": 9443,
                    "insecure_port": None,
                    "users": {"carol": "pw"},
                    "shared_root": str(tmp_path / "storage"),
                    "signing_kid": "edge-key-7",
                    "cull": {"idle_timeout": 120, "cull_interval": 10, "shutdown_grace": 5},
                    "egress_allowlist": ["pypi.org"],
                }
            )
        )
        config = load_serve_config(path, access_log=tmp_path / "log.jsonl")
        assert config.secure_port == 9443
        assert config.insecure_port is None
        assert config.users == {"carol": "pw"}
        assert config.signing_kid == "edge-key-7"
        assert config.default_policy.idle_timeout == 120
        assert config.egress_allowlist == ("pypi.org",)
        assert config.access_log_path == tmp_path / "log.jsonl"

    def test_declarative_rules_and_static_targets(self, tmp_path):
        from workhub.clock import VirtualClock
        from workhub.httpd import AppServer, HttpResponse
        from workhub.gateway import run_health_checks

        docs = AppServer(lambda request: HttpResponse.text(200, f"docs:{request.path}"))
        path = tmp_path / "serve.yaml"
        path.write_text(
            yaml.safe_dump(
                {
                    "secure_port": 0,
                    "insecure_port": None,
                    "shared_root": str(tmp_path / "storage"),
                    "health_check_interval": 1.0,
                    "static_targets": {
                        "tg-docs": {
                            "health_check_path": "/",
                            "expected_status": [200],
                            "targets": [f"{docs.host}:{docs.port}"],
                        }
                    },
                    "rules": [
                        {"id": "rule-docs", "priority": 50, "path": "/docs*", "action": "public-forward",
                         "target_group": "tg-docs"}
                    ],
                }
            )
        )
        runtime = PlatformRuntime(load_serve_config(path), VirtualClock())
        try:
            group = runtime.target_groups.get("tg-docs")
            run_health_checks([group], runtime.clock.now(), force=True)
            run_health_checks([group], runtime.clock.now(), force=True)
            client = BrowserClient(runtime.config.host, runtime.gateway.secure_port)
            response = client.get("/docs/guide")
            assert response.status == 200
            assert response.body == b"docs:/docs/guide"
        finally:
            runtime.shutdown()
            docs.shutdown()

    def test_system_clock_smoke(self, tmp_path):
        """Real-time boot: background pump brings the hub healthy and a full
        login+dashboard round trip works."""
        path = tmp_path / "serve.yaml"
        path.write_text(
            yaml.safe_dump(
                {
                    "secure_port": 0,
                    "insecure_port": None,
                    "users": {"alice": "wonderland"},
                    "shared_root": str(tmp_path / "storage"),
                    "health_check_interval": 0.2,
                    "startup_delay": 0.1,
                }
            )
        )
        runtime = PlatformRuntime(load_serve_config(path))
        runtime.run_background(interval=0.1)
        try:
            deadline = time.time() + 10.0
            group = runtime.target_groups.get("tg-hub")
            while time.time() < deadline and not group.healthy_targets():
                time.sleep(0.05)
            assert group.healthy_targets(), "hub never became healthy under the system clock"
            client = BrowserClient(runtime.config.host, runtime.gateway.secure_port)
            client.login("alice", "wonderland")
            page = client.get("/app", follow=True)
            assert page.status == 200
            assert b'data-user="alice"' in page.body
        finally:
            runtime.shutdown()
