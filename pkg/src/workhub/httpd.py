"""Minimal embedded HTTP machinery shared by the gateway, hub, key server
and simulated workspace apps.

An application is a callable taking an HttpRequest and returning an
HttpResponse; AppServer runs one on a threading stdlib server. http_call is
the matching plain client used for proxying and health probes.
"""

from __future__ import annotations

import http.client
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Iterable, Iterator
from urllib.parse import parse_qs, urlsplit


class HeaderMap:
    """Case-insensitive header multimap preserving insertion order."""

    def __init__(self, items: Iterable[tuple[str, str]] = ()) -> None:
        self._items: list[tuple[str, str]] = [(k, v) for k, v in items]

    def get(self, name: str, default: str | None = None) -> str | None:
        low = name.lower()
        for k, v in self._items:
            if k.lower() == low:
                return v
        return default

    def get_all(self, name: str) -> list[str]:
        low = name.lower()
        return [v for k, v in self._items if k.lower() == low]

    def add(self, name: str, value: str) -> None:
        self._items.append((name, value))

    def set(self, name: str, value: str) -> None:
        self.remove(name)
        self.add(name, value)

    def remove(self, name: str) -> None:
        low = name.lower()
        self._items = [(k, v) for k, v in self._items if k.lower() != low]

    def remove_prefix(self, prefix: str) -> None:
        low = prefix.lower()
        self._items = [(k, v) for k, v in self._items if not k.lower().startswith(low)]

    def items(self) -> list[tuple[str, str]]:
        return list(self._items)

    def __contains__(self, name: str) -> bool:
        return self.get(name) is not None

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self._items)

    def copy(self) -> "HeaderMap":
        return HeaderMap(self._items)


@dataclass
class HttpRequest:
    method: str
    path: str                      # path only, no query string
    query: dict[str, list[str]]
    headers: HeaderMap
    body: bytes = b""
    client_addr: str = ""
    scheme: str = "http"           # listener-level transport hint
    raw_query: str = ""

    @property
    def host(self) -> str:
        return self.headers.get("Host", "") or ""

    def query_first(self, name: str, default: str = "") -> str:
        vals = self.query.get(name)
        return vals[0] if vals else default

    def form(self) -> dict[str, str]:
        parsed = parse_qs(self.body.decode("utf-8", "replace"))
        return {k: v[0] for k, v in parsed.items() if v}

    def cookies(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for raw in self.headers.get_all("Cookie"):
            for part in raw.split(";"):
                if "=" in part:
                    k, _, v = part.strip().partition("=")
                    out[k] = v
        return out


@dataclass
class HttpResponse:
    status: int
    headers: list[tuple[str, str]] = field(default_factory=list)
    body: bytes = b""

    @classmethod
    def text(cls, status: int, text: str, content_type: str = "text/plain; charset=utf-8") -> "HttpResponse":
        return cls(status, [("Content-Type", content_type)], text.encode("utf-8"))

    @classmethod
    def html(cls, status: int, html: str) -> "HttpResponse":
        return cls.text(status, html, "text/html; charset=utf-8")

    @classmethod
    def json(cls, status: int, payload: object) -> "HttpResponse":
        import json

        return cls(status, [("Content-Type", "application/json")], json.dumps(payload).encode("utf-8"))

    @classmethod
    def redirect(cls, location: str, status: int = 302) -> "HttpResponse":
        return cls(status, [("Location", location)], b"")

    def header(self, name: str, default: str | None = None) -> str | None:
        low = name.lower()
        for k, v in self.headers:
            if k.lower() == low:
                return v
        return default


AppFn = Callable[[HttpRequest], HttpResponse]


class AppServer:
    """ThreadingHTTPServer hosting one application callable."""

    def __init__(self, app: AppFn, host: str = "127.0.0.1", port: int = 0, scheme: str = "http") -> None:
        self.app = app
        outer = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def _dispatch(self) -> None:
                split = urlsplit(self.path)
                length = int(self.headers.get("Content-Length") or 0)
                body = self.rfile.read(length) if length else b""
                request = HttpRequest(
                    method=self.command,
                    path=split.path,
                    query=parse_qs(split.query),
                    headers=HeaderMap(self.headers.items()),
                    body=body,
                    client_addr=self.client_address[0],
                    scheme=outer.scheme,
                    raw_query=split.query,
                )
                try:
                    response = outer.app(request)
                except Exception as exc:  # app bug: answer 500, keep serving
                    response = HttpResponse.text(500, f"internal error: {exc}")
                self.send_response(response.status)
                seen_length = False
                for k, v in response.headers:
                    if k.lower() == "content-length":
                        seen_length = True
                    self.send_header(k, v)
                if not seen_length:
                    self.send_header("Content-Length", str(len(response.body)))
                self.end_headers()
                if self.command != "HEAD":
                    self.wfile.write(response.body)

            do_GET = do_POST = do_PUT = do_DELETE = do_HEAD = do_PATCH = _dispatch

            def log_message(self, fmt: str, *args: object) -> None:
                pass

        self.scheme = scheme
        self._server = ThreadingHTTPServer((host, port), Handler)
        self._server.daemon_threads = True
        self.host = host
        self.port = self._server.server_address[1]
        self._thread = threading.Thread(
            target=self._server.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True
        )
        self._thread.start()

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()


class TransportError(Exception):
    """Connection-level failure talking to an upstream."""


def http_call(
    method: str,
    host: str,
    port: int,
    path: str,
    headers: Iterable[tuple[str, str]] = (),
    body: bytes = b"",
    timeout: float = 5.0,
) -> HttpResponse:
    try:
        conn = http.client.HTTPConnection(host, port, timeout=timeout)
        try:
            conn.putrequest(method, path, skip_host=True, skip_accept_encoding=True)
            sent_host = False
            for k, v in headers:
                if k.lower() == "host":
                    sent_host = True
                conn.putheader(k, v)
            if not sent_host:
                conn.putheader("Host", f"{host}:{port}")
            conn.putheader("Content-Length", str(len(body)))
            conn.endheaders()
            if body:
                conn.send(body)
            raw = conn.getresponse()
            return HttpResponse(raw.status, list(raw.getheaders()), raw.read())
        finally:
            conn.close()
    except OSError as exc:
        raise TransportError(str(exc)) from exc
