"""Hub HTTP surface: login entry, dashboard shell, and the workspace API.

Every endpoint except the login page sits behind an authenticating gateway
rule, so handlers trust (after re-validating) the injected identity
headers. The dashboard is a static shell; data comes from /api/workspaces.
"""

from __future__ import annotations

import mimetypes
import threading
from pathlib import Path

from ..auth import KeyCache, VerifiedIdentity, extract_oidc_headers, verify_jwt
from ..clock import Clock
from ..httpd import HttpRequest, HttpResponse
from .stacks import (
    BackendFailureError,
    ControlPlane,
    IdentityMismatchError,
    NoSuchStackError,
    UnknownApplicationError,
)

PING_PATH = "/ping"
APP_SHELL_PATH = "/app"
LOGIN_PAGE = """<!doctype html>
<html><head><title>Workspaces</title></head><body>
<h1>Workspaces</h1>
<p>Sign in to launch and open your workspaces.</p>
<p><a href="{target}" class="login-button">Sign in</a></p>
</body></html>
"""

DASHBOARD_SHELL = """<!doctype html>
<html><head><title>Workspaces - {user}</title>{head}</head>
<body data-user="{user}">
<div id="dashboard">
<h1>Workspaces for {user}</h1>
<noscript>Data endpoint: <a href="/api/workspaces">/api/workspaces</a></noscript>
</div>
{script}
</body></html>
"""


class HubApp:
    def __init__(
        self,
        control_plane: ControlPlane,
        clock: Clock,
        key_provider,
        static_dir: str | Path | None = None,
        login_target: str = APP_SHELL_PATH,
    ) -> None:
        self.control_plane = control_plane
        self.clock = clock
        self.key_provider = key_provider
        self.static_dir = Path(static_dir) if static_dir else None
        self.login_target = login_target
        self._cache = KeyCache()
        self._cache_lock = threading.Lock()

    # -- entry point -------------------------------------------------------------

    def __call__(self, request: HttpRequest) -> HttpResponse:
        path = request.path
        if path == PING_PATH:
            return HttpResponse.text(200, "pong")
        if path == "/" or path == APP_SHELL_PATH:
            return self._root(request)
        if self.static_dir and path.startswith(APP_SHELL_PATH + "/assets/"):
            return self._static(path[len(APP_SHELL_PATH + "/assets/"):])
        if path.startswith("/api/"):
            return self._api(request)
        return HttpResponse.text(404, "not found")

    # -- views --------------------------------------------------------------------

    def _root(self, request: HttpRequest) -> HttpResponse:
        user = self._verified_user(request)
        if user is None:
            return HttpResponse.html(200, LOGIN_PAGE.format(target=self.login_target))
        head, script = "", ""
        if self.static_dir and (self.static_dir / "main.js").exists():
            head = '<link rel="stylesheet" href="/app/assets/style.css">'
            script = '<script type="module" src="/app/assets/main.js"></script>'
        return HttpResponse.html(200, DASHBOARD_SHELL.format(user=user, head=head, script=script))

    def _static(self, rel: str) -> HttpResponse:
        assert self.static_dir is not None
        target = (self.static_dir / rel).resolve()
        root = self.static_dir.resolve()
        if root != target and root not in target.parents:
            return HttpResponse.text(404, "not found")
        if not target.is_file():
            return HttpResponse.text(404, "not found")
        content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        return HttpResponse(200, [("Content-Type", content_type)], target.read_bytes())

    def _api(self, request: HttpRequest) -> HttpResponse:
        user = self._verified_user(request)
        if user is None:
            return HttpResponse.json(401, {"error": "unauthenticated"})
        parts = [p for p in request.path.split("/") if p]
        try:
            if parts == ["api", "workspaces"] and request.method == "GET":
                return HttpResponse.json(200, {"user": user, "workspaces": self.control_plane.workspaces(user)})
            if len(parts) == 3 and parts[:2] == ["api", "connect"] and request.method == "POST":
                outcome = self.control_plane.connect(user, parts[2], verified_user=user)
                return HttpResponse.json(200, {"outcome": outcome.kind, "url": outcome.url})
            if len(parts) == 3 and parts[:2] == ["api", "poll"] and request.method == "GET":
                return HttpResponse.json(200, self.control_plane.poll(user, parts[2]))
            if len(parts) == 3 and parts[:2] == ["api", "decommission"] and request.method == "POST":
                self.control_plane.decommission(user, parts[2], verified_user=user)
                return HttpResponse.json(200, {"decommissioned": parts[2]})
        except UnknownApplicationError as exc:
            return HttpResponse.json(404, {"error": "unknown-application", "detail": str(exc)})
        except NoSuchStackError as exc:
            return HttpResponse.json(404, {"error": "no-such-stack", "detail": str(exc)})
        except IdentityMismatchError as exc:
            return HttpResponse.json(403, {"error": "identity-mismatch", "detail": str(exc)})
        except BackendFailureError as exc:
            return HttpResponse.json(502, {"error": "backend-failure", "detail": str(exc)})
        return HttpResponse.json(404, {"error": "no-such-endpoint"})

    # -- auth -----------------------------------------------------------------------

    def _verified_user(self, request: HttpRequest) -> str | None:
        headers = extract_oidc_headers(request.headers)
        if not headers.data:
            return None
        with self._cache_lock:
            verdict = verify_jwt(headers, self._cache, self.key_provider, self.clock.now())
        return verdict.oidc_id if isinstance(verdict, VerifiedIdentity) else None
