"""Simulated workspace applications, keyed by image id.

Each factory receives the task's context (environment, mounts, clock) and
returns the request handler the task serves on its mapped port. The apps
reproduce the authentication behavior of the real containers: Jupyter's
login handler pair, RStudio's cookie flow behind a rewriting proxy, and
the VNC web client guarding an internal server that is never exposed.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..adapters import check_home_ownership
from ..adapters import jupyter as jupyter_adapter
from ..adapters import rstudio as rstudio_adapter
from ..adapters import vnc as vnc_adapter
from ..auth import (
    HttpKeyProvider,
    KeyCache,
    ProviderUnreachableError,
    extract_oidc_headers,
)
from ..clock import Clock
from ..httpd import AppFn, HttpRequest, HttpResponse

ENV_BASE_URL = "BASE_URL"
ENV_WORKSPACE_USER = "WORKSPACE_USER"
ENV_KEY_SERVER = "KEY_SERVER_BASE"
ENV_COOKIE_KEY_PATH = "RSTUDIO_COOKIE_KEY_PATH"
ENV_COOKIE_DAYS = "RSTUDIO_COOKIE_DAYS"

JUPYTER_HOME = "/home/jovyan"
RSTUDIO_HOME = "/home/rstudio"
VNC_HOME = "/headless"


class _UnreachableProvider:
    def get_key(self, kid: str) -> str:
        raise ProviderUnreachableError("task has no key server configured")


@dataclass
class TaskContext:
    """Everything a simulated app can see from inside its task."""

    task_id: str
    environment: dict[str, str]
    mounts: dict[str, str]
    host: str
    port: int
    private_dir: Path
    clock: Clock

    def resolve(self, container_path: str) -> Path | None:
        """Map a container path to the bound host path; None when no mount
        covers it (a misconfigured task simply has no such file)."""
        best: tuple[str, str] | None = None
        for container, host in self.mounts.items():
            if container_path == container or container_path.startswith(container.rstrip("/") + "/"):
                if best is None or len(container) > len(best[0]):
                    best = (container, host)
        if best is None:
            return None
        container, host = best
        remainder = container_path[len(container):].lstrip("/")
        return Path(host) / remainder if remainder else Path(host)

    def key_provider(self):
        base = self.environment.get(ENV_KEY_SERVER)
        if not base:
            return _UnreachableProvider()
        if not base.endswith("/"):
            base += "/"
        return HttpKeyProvider(base)


AppFactory = Callable[[TaskContext], AppFn]


def _in_base(base: str, path: str) -> str | None:
    if path == base:
        return "/"
    if path.startswith(base.rstrip("/") + "/"):
        return path[len(base.rstrip("/")):]
    return None


def jupyter_app(ctx: TaskContext) -> AppFn:
    """Notebook-style app: unauthenticated hits on the base path bounce to
    the login page with a 302 (doubles as the health check); the login
    handler validates gateway headers and grants a session."""
    base = ctx.environment.get(ENV_BASE_URL, "/")
    owner = ctx.environment.get(ENV_WORKSPACE_USER, "")
    home = ctx.resolve(JUPYTER_HOME)
    cache = KeyCache()
    provider = ctx.key_provider()
    lock = threading.Lock()
    sessions: dict[str, str] = {}

    def ownership_denial(user: str) -> HttpResponse | None:
        if user != owner:
            return HttpResponse.text(403, f"workspace belongs to {owner!r}")
        if home is None or not check_home_ownership(home, user):
            return HttpResponse.text(403, "home directory ownership check failed")
        return None

    def handle(request: HttpRequest) -> HttpResponse:
        now = ctx.clock.now()
        sub = _in_base(base, request.path)
        if sub is None:
            return HttpResponse.text(404, "outside base url")
        session_user = sessions.get(request.cookies().get("jupyter-session", ""))
        headers = extract_oidc_headers(request.headers)

        if sub == "/login":
            with lock:
                decision = jupyter_adapter.login_get(
                    session_user,
                    headers,
                    base,
                    request.query_first("next") or None,
                    cache=cache,
                    provider=provider,
                    now=now,
                )
            if decision.outcome != "redirect":
                return HttpResponse.html(200, "<html><body>notebook login</body></html>")
            response = HttpResponse.redirect(decision.next_url or base)
            if decision.session_token:
                denied = ownership_denial(headers.identity or "")
                if denied:
                    return denied
                sessions[decision.session_token] = headers.identity or ""
                response.headers.append(
                    ("Set-Cookie", f"jupyter-session={decision.session_token}; HttpOnly; Path={base}")
                )
            return response

        user = session_user
        if user is None:
            with lock:
                token = jupyter_adapter.get_user_token(headers, cache, provider, now=now)
            if token is not None:
                user = headers.identity
        if user is None:
            return HttpResponse.redirect(f"{base}/login?next={request.path}")
        denied = ownership_denial(user)
        if denied:
            return denied
        view = "lab" if sub.startswith("/lab") else "tree"
        return HttpResponse.html(200, f"<html><body>notebook {view} for {user}</body></html>")

    return handle


def rstudio_app(ctx: TaskContext) -> AppFn:
    """RStudio container: rewriting proxy in front of the IDE, a sign-in
    capture that converts gateway headers into the HMAC session cookie, and
    an unauthenticated /ping for the health check."""
    prefix = ctx.environment.get(ENV_BASE_URL, "/").rstrip("/")
    owner = ctx.environment.get(ENV_WORKSPACE_USER, "")
    home = ctx.resolve(RSTUDIO_HOME)
    cache = KeyCache()
    provider = ctx.key_provider()
    lock = threading.Lock()

    key_path = Path(
        ctx.environment.get(
            ENV_COOKIE_KEY_PATH,
            str(ctx.private_dir / rstudio_adapter.DEFAULT_SECRET_PATH.lstrip("/")),
        )
    )
    key_path.parent.mkdir(parents=True, exist_ok=True)
    if not key_path.exists():
        key_path.write_text(secrets.token_hex(32))
    secret = key_path.read_text().strip().encode("ascii")
    cookie_days = int(ctx.environment.get(ENV_COOKIE_DAYS, "1"))

    def handle(request: HttpRequest) -> HttpResponse:
        import datetime

        now = ctx.clock.now()
        if request.path == rstudio_adapter.PING_PATH:
            return HttpResponse.text(200, "pong")
        internal = rstudio_adapter.rewrite_prefix(prefix, request.path)
        if internal is None:
            return HttpResponse.text(404, "outside base url")

        if internal == f"/{rstudio_adapter.SIGNIN_SEGMENT}":
            headers = extract_oidc_headers(request.headers)
            with lock:
                result = rstudio_adapter.auth_signin(
                    headers,
                    owner,
                    secret,
                    now,
                    cache=cache,
                    provider=provider,
                    app_prefix=prefix,
                    cookie_days=cookie_days,
                    home=home,
                )
            if not result.ok:
                return HttpResponse.text(403, f"sign-in denied: {result.deny_reason}")
            response = HttpResponse.redirect(result.redirect)
            response.headers.append(("Set-Cookie", result.set_cookie))
            return response

        wire = request.cookies().get(rstudio_adapter.COOKIE_NAME)
        moment = datetime.datetime.fromtimestamp(now, datetime.timezone.utc).replace(tzinfo=None)
        if wire:
            try:
                rstudio_adapter.verify_cookie(wire, secret, moment)
            except rstudio_adapter.CookieError:
                wire = None
        if not wire:
            return HttpResponse.redirect(
                rstudio_adapter.reapply_prefix(prefix, f"/{rstudio_adapter.SIGNIN_SEGMENT}")
            )
        return HttpResponse.html(200, f"<html><body>rstudio ide at {internal}</body></html>")

    return handle


@dataclass
class VncEchoServer:
    """Stub for the internal VNC server on the unexposed port."""

    port: int = vnc_adapter.VNC_SERVER_PORT
    frames: list[str] = field(default_factory=list)

    def exchange(self, data: str) -> str:
        self.frames.append(data)
        return f"vnc-echo:{data}"


def vnc_app(ctx: TaskContext) -> AppFn:
    """Web VNC client: the page itself is the health surface; the websocket
    bridge authenticates gateway headers before touching the VNC stub."""
    base = ctx.environment.get(ENV_BASE_URL, "/").rstrip("/")
    owner = ctx.environment.get(ENV_WORKSPACE_USER, "")
    home = ctx.resolve(VNC_HOME)
    cache = KeyCache()
    provider = ctx.key_provider()
    lock = threading.Lock()
    vnc_server = VncEchoServer()

    def handle(request: HttpRequest) -> HttpResponse:
        now = ctx.clock.now()
        sub = _in_base(base, request.path)
        if sub is None:
            return HttpResponse.text(404, "outside base url")
        if sub == "/":
            return HttpResponse.html(200, "<html><body>web vnc client</body></html>")
        if sub == "/websockify":
            headers = extract_oidc_headers(request.headers)
            try:
                with lock:
                    verdict = vnc_adapter.authenticate(
                        headers,
                        "127.0.0.1",
                        vnc_server.port,
                        cache,
                        provider,
                        now,
                        expected_user=owner,
                        home=home,
                    )
            except vnc_adapter.AuthenticationError as exc:
                return HttpResponse.text(403, f"authentication failed: {exc}")
            payload = request.query_first("data", "hello")
            return HttpResponse.text(200, f"{verdict.oidc_id}:{vnc_server.exchange(payload)}")
        return HttpResponse.text(404, "no such resource")

    return handle


DEFAULT_IMAGES: dict[str, AppFactory] = {
    "jupyter-workspace": jupyter_app,
    "rstudio-workspace": rstudio_app,
    "vnc-workspace": vnc_app,
}
