"""The authenticating edge: listener rules, login sessions, header
injection, health-gated forwarding, and the append-only access log.

Desk-scale transport is plaintext; the secure listener is marked https
logically and the insecure listener redirects to it, so scheme enforcement
stays observable without certificate plumbing.
"""

from __future__ import annotations

import secrets
from typing import Callable
from urllib.parse import quote, unquote

from ..auth import (
    HEADER_ACCESS_TOKEN,
    HEADER_DATA,
    HEADER_IDENTITY,
    OIDC_HEADER_PREFIX,
    TokenClaims,
    mint_token,
)
from ..clock import Clock
from ..httpd import AppServer, HttpRequest, HttpResponse, TransportError, http_call
from .accesslog import (
    OUTCOME_FAILURE,
    OUTCOME_NOT_REQUIRED,
    OUTCOME_SUCCESS,
    AccessLogRecord,
)
from .rules import ActionKind, ListenerRule, RoutingTable
from .sessions import GatewaySessionStore, TestIdentityProvider
from .targets import TargetGroupRegistry

HOP_BY_HOP = frozenset(
    {
        "connection",
        "keep-alive",
        "proxy-authenticate",
        "proxy-authorization",
        "te",
        "trailer",
        "trailers",
        "transfer-encoding",
        "upgrade",
    }
)

DEFAULT_TOKEN_TTL = 300.0
DEFAULT_LOGIN_PATH = "/_login"
DEFAULT_SESSION_COOKIE = "gateway-session"

_LOGIN_FORM = """<!doctype html>
<html><head><title>Sign in</title></head><body>
<h1>Sign in</h1>
<form method="post" action="{action}">
  <input type="hidden" name="next" value="{next}">
  <label>User <input name="username" autocomplete="username"></label>
  <label>Password <input type="password" name="password" autocomplete="current-password"></label>
  <button type="submit">Sign in</button>
</form>{notice}
</body></html>
"""


def enforce_secure_transport(
    request: HttpRequest, secure_port: int | None = None, secure_base: str | None = None
) -> str | None:
    """None when the request already rides the secure listener; otherwise
    the same URL under the secure scheme."""
    if request.scheme == "https":
        return None
    hostname = (request.host or "localhost").split(":", 1)[0]
    if secure_base:
        base = secure_base.rstrip("/")
    elif secure_port:
        base = f"https://{hostname}:{secure_port}"
    else:
        base = f"https://{hostname}"
    query = f"?{request.raw_query}" if request.raw_query else ""
    return f"{base}{request.path}{query}"


class EdgeGateway:
    def __init__(
        self,
        clock: Clock,
        routing: RoutingTable,
        target_groups: TargetGroupRegistry,
        sessions: GatewaySessionStore,
        idp: TestIdentityProvider,
        signing_key,
        signing_kid: str,
        access_log,
        token_ttl: float = DEFAULT_TOKEN_TTL,
        login_path: str = DEFAULT_LOGIN_PATH,
        session_cookie: str = DEFAULT_SESSION_COOKIE,
        secure_base: str | None = None,
        on_forward: Callable[[str], None] | None = None,
    ) -> None:
        self.clock = clock
        self.routing = routing
        self.target_groups = target_groups
        self.sessions = sessions
        self.idp = idp
        self.signing_key = signing_key
        self.signing_kid = signing_kid
        self.access_log = access_log
        self.token_ttl = token_ttl
        self.login_path = login_path
        self.session_cookie = session_cookie
        self.secure_base = secure_base
        self.on_forward = on_forward
        self._secure_server: AppServer | None = None
        self._insecure_server: AppServer | None = None

    # -- lifecycle ------------------------------------------------------------

    def start(self, host: str = "127.0.0.1", secure_port: int = 0, insecure_port: int | None = None) -> None:
        self._secure_server = AppServer(self._handle, host=host, port=secure_port, scheme="https")
        if insecure_port is not None:
            self._insecure_server = AppServer(self._handle, host=host, port=insecure_port, scheme="http")

    @property
    def secure_port(self) -> int:
        assert self._secure_server is not None, "gateway not started"
        return self._secure_server.port

    @property
    def insecure_port(self) -> int | None:
        return self._insecure_server.port if self._insecure_server else None

    def shutdown(self) -> None:
        for server in (self._secure_server, self._insecure_server):
            if server is not None:
                server.shutdown()

    # -- request pipeline ------------------------------------------------------

    def _handle(self, request: HttpRequest) -> HttpResponse:
        now = self.clock.now()

        redirect = enforce_secure_transport(request, self._secure_port_or_none(), self.secure_base)
        if redirect is not None:
            response = HttpResponse.redirect(redirect, status=301)
            self._log(request, None, OUTCOME_NOT_REQUIRED, "insecure-listener-redirect", None, response.status)
            return response

        if request.path == self.login_path:
            return self._handle_login(request, now)

        rule = self.routing.match(request.host, request.path)
        if rule is None:
            response = HttpResponse.text(404, "no listener rule matches this request")
            self._log(request, None, OUTCOME_NOT_REQUIRED, "no-rule", None, 404)
            return response

        kind = rule.action.kind
        if kind is ActionKind.REDIRECT_TO_SECURE:
            location = enforce_secure_transport(
                HttpRequest(
                    method=request.method,
                    path=request.path,
                    query=request.query,
                    headers=request.headers,
                    scheme="http",
                    raw_query=request.raw_query,
                    client_addr=request.client_addr,
                ),
                self._secure_port_or_none(),
                self.secure_base,
            )
            response = HttpResponse.redirect(location or "/", status=301)
            self._log(request, rule, OUTCOME_NOT_REQUIRED, "redirect-to-secure", None, response.status)
            return response

        if kind in (ActionKind.FORWARD, ActionKind.PUBLIC_FORWARD):
            request.headers.remove_prefix(OIDC_HEADER_PREFIX)
            return self._forward(request, rule, client=request.client_addr, outcome=OUTCOME_NOT_REQUIRED, reason=None)

        # authenticate-then-forward
        session_id = request.cookies().get(self.session_cookie, "")
        user = self.sessions.lookup(session_id, now) if session_id else None
        if user is None:
            target = quote(request.path + (f"?{request.raw_query}" if request.raw_query else ""), safe="")
            response = HttpResponse.redirect(f"{self.login_path}?next={target}")
            self._log(request, rule, OUTCOME_FAILURE, "no-session", None, response.status)
            return response

        self._inject_identity(request, user, now)
        return self._forward(request, rule, client=user, outcome=OUTCOME_SUCCESS, reason=None)

    def _inject_identity(self, request: HttpRequest, user: str, now: float) -> None:
        """Strip any client-supplied identity headers, then attach freshly
        minted ones for the session user."""
        request.headers.remove_prefix(OIDC_HEADER_PREFIX)
        token = mint_token(
            self.signing_key,
            TokenClaims(sub=user, exp=now + self.token_ttl, extra={"iat": int(now)}),
            self.signing_kid,
        )
        request.headers.add(HEADER_IDENTITY, user)
        request.headers.add(HEADER_DATA, token)
        request.headers.add(HEADER_ACCESS_TOKEN, f"at-{secrets.token_urlsafe(12)}")

    def _forward(
        self,
        request: HttpRequest,
        rule: ListenerRule,
        client: str,
        outcome: str,
        reason: str | None,
    ) -> HttpResponse:
        group = self.target_groups.get(rule.action.target_group or "")
        target = group.pick_target() if group is not None else None
        if target is None:
            response = HttpResponse.text(503, "no healthy targets")
            self._log(request, rule, outcome, reason or "no-healthy-targets", None, 503)
            return response

        if self.on_forward is not None and group is not None:
            self.on_forward(group.group_id)

        upstream_headers = [
            (k, v) for k, v in request.headers.items() if k.lower() not in HOP_BY_HOP and k.lower() != "host"
        ]
        upstream_headers.append(("Host", request.host or f"{target[0]}:{target[1]}"))
        upstream_headers.append(("X-Forwarded-For", request.client_addr or "-"))
        upstream_headers.append(("X-Forwarded-Proto", "https"))
        path = request.path + (f"?{request.raw_query}" if request.raw_query else "")
        try:
            upstream = http_call(
                request.method, target[0], target[1], path, upstream_headers, request.body, timeout=10.0
            )
        except TransportError as exc:
            response = HttpResponse.text(502, f"upstream transport failure: {exc}")
            self._log(request, rule, outcome, reason or "upstream-transport-failure", f"{target[0]}:{target[1]}", 502)
            return response

        response_headers = [(k, v) for k, v in upstream.headers if k.lower() not in HOP_BY_HOP]
        response = HttpResponse(upstream.status, response_headers, upstream.body)
        final_outcome, final_reason = outcome, reason
        if outcome == OUTCOME_SUCCESS and upstream.status in (401, 403):
            final_outcome, final_reason = OUTCOME_FAILURE, "upstream-denied"
        self._log(request, rule, final_outcome, final_reason, f"{target[0]}:{target[1]}", upstream.status, client)
        return response

    # -- login ------------------------------------------------------------------

    def _handle_login(self, request: HttpRequest, now: float) -> HttpResponse:
        next_url = unquote(request.query_first("next", "/"))
        if not next_url.startswith("/"):
            next_url = "/"
        if request.method == "GET":
            body = _LOGIN_FORM.format(action=self.login_path, next=next_url, notice="")
            self._log(request, None, OUTCOME_NOT_REQUIRED, "login-page", None, 200)
            return HttpResponse.html(200, body)

        form = request.form()
        username = form.get("username", "")
        password = form.get("password", "")
        next_url = form.get("next", next_url) or "/"
        if not next_url.startswith("/"):
            next_url = "/"
        if not self.idp.authenticate(username, password):
            body = _LOGIN_FORM.format(action=self.login_path, next=next_url, notice="<p>Sign-in failed.</p>")
            self._log(request, None, OUTCOME_FAILURE, "bad-credentials", None, 401)
            return HttpResponse(401, [("Content-Type", "text/html; charset=utf-8")], body.encode())

        session_id = self.sessions.create(username, now)
        response = HttpResponse.redirect(next_url)
        response.headers.append(
            ("Set-Cookie", f"{self.session_cookie}={session_id}; HttpOnly; Secure; Path=/")
        )
        self._log(request, None, OUTCOME_SUCCESS, "login", None, response.status, client=username)
        return response

    # -- plumbing -----------------------------------------------------------------

    def _secure_port_or_none(self) -> int | None:
        return self._secure_server.port if self._secure_server else None

    def _log(
        self,
        request: HttpRequest,
        rule: ListenerRule | None,
        outcome: str,
        reason: str | None,
        target: str | None,
        status: int,
        client: str | None = None,
    ) -> None:
        self.access_log.append(
            AccessLogRecord(
                timestamp=self.clock.now(),
                client=client or request.client_addr or "-",
                method=request.method,
                host=request.host,
                path=request.path,
                rule_priority=rule.priority if rule else None,
                auth_outcome=outcome,
                auth_reason=reason,
                target=target,
                status=status,
            )
        )
