"""Key distribution: an in-memory registry, the HTTP key server that fronts
it, and the client provider that workspace verifiers use.

The wire contract is a plain GET of <base><kid> returning the public key
text verbatim, so the client concatenates base + kid exactly.
"""

from __future__ import annotations

import threading
from typing import Protocol
from urllib.parse import urlsplit

from ..httpd import AppServer, HttpRequest, HttpResponse, TransportError, http_call
from .errors import KeyNotFoundError, ProviderUnreachableError


class KeyProvider(Protocol):
    def get_key(self, kid: str) -> str:
        """Return public-key text for kid; raise KeyNotFoundError or
        ProviderUnreachableError otherwise."""


class InMemoryKeyProvider:
    """Registry of kid -> public key PEM; doubles as the key server's store."""

    def __init__(self) -> None:
        self._keys: dict[str, str] = {}
        self._lock = threading.Lock()

    def register(self, kid: str, pem: str) -> None:
        with self._lock:
            self._keys[kid] = pem

    def unregister(self, kid: str) -> None:
        with self._lock:
            self._keys.pop(kid, None)

    def get_key(self, kid: str) -> str:
        with self._lock:
            try:
                return self._keys[kid]
            except KeyError:
                raise KeyNotFoundError(f"no key registered for kid {kid!r}") from None


class CountingKeyProvider:
    """Wraps a provider and counts fetches; used to assert cache behavior."""

    def __init__(self, inner: KeyProvider) -> None:
        self.inner = inner
        self.calls = 0
        self.enabled = True

    def get_key(self, kid: str) -> str:
        self.calls += 1
        if not self.enabled:
            raise ProviderUnreachableError("provider disabled")
        return self.inner.get_key(kid)


class HttpKeyProvider:
    """Fetches keys over HTTP from <base><kid>."""

    def __init__(self, base_url: str, timeout: float = 5.0) -> None:
        self.base_url = base_url
        self.timeout = timeout

    def get_key(self, kid: str) -> str:
        url = self.base_url + kid
        split = urlsplit(url)
        host = split.hostname or ""
        port = split.port or 80
        try:
            response = http_call("GET", host, port, split.path or "/", timeout=self.timeout)
        except TransportError as exc:
            raise ProviderUnreachableError(str(exc)) from exc
        if response.status == 404:
            raise KeyNotFoundError(f"no key for kid {kid!r}")
        if response.status != 200:
            raise ProviderUnreachableError(f"key server answered {response.status}")
        return response.body.decode("utf-8")


class KeyServer:
    """HTTP front for a key registry: GET /<kid> -> key text."""

    def __init__(self, registry: InMemoryKeyProvider, host: str = "127.0.0.1", port: int = 0) -> None:
        self.registry = registry
        self._server = AppServer(self._handle, host=host, port=port)
        self.host = self._server.host
        self.port = self._server.port

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}/"

    def _handle(self, request: HttpRequest) -> HttpResponse:
        if request.method != "GET":
            return HttpResponse.text(405, "method not allowed")
        kid = request.path.lstrip("/")
        try:
            pem = self.registry.get_key(kid)
        except KeyNotFoundError:
            return HttpResponse.text(404, "unknown key id")
        return HttpResponse.text(200, pem)

    def shutdown(self) -> None:
        self._server.shutdown()
