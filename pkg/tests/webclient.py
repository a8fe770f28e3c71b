"""Minimal browser-like client for end-to-end tests: cookie jar (attributes
ignored; the harness transport is plaintext) and relative-redirect
following against one gateway listener."""

from __future__ import annotations

from urllib.parse import urlsplit

from workhub.httpd import HttpResponse, http_call


class BrowserClient:
    def __init__(self, host: str, port: int) -> None:
        self.host = host
        self.port = port
        self.cookies: dict[str, str] = {}

    def _absorb_cookies(self, response: HttpResponse) -> None:
        for name, value in response.headers:
            if name.lower() != "set-cookie":
                continue
            pair = value.split(";", 1)[0]
            if "=" in pair:
                cookie_name, _, cookie_value = pair.partition("=")
                self.cookies[cookie_name.strip()] = cookie_value.strip()

    def request(
        self,
        method: str,
        path: str,
        headers: list[tuple[str, str]] | None = None,
        body: bytes = b"",
        follow: bool = False,
        max_redirects: int = 10,
    ) -> HttpResponse:
        current_method, current_path, current_body = method, path, body
        for _ in range(max_redirects + 1):
            sent = list(headers or [])
            if self.cookies:
                sent.append(("Cookie", "; ".join(f"{k}={v}" for k, v in self.cookies.items())))
            response = http_call(current_method, self.host, self.port, current_path, sent, current_body)
            self._absorb_cookies(response)
            location = response.header("Location")
            if not follow or response.status not in (301, 302, 303, 307, 308) or not location:
                return response
            split = urlsplit(location)
            if split.scheme and (split.hostname != self.host or (split.port or 0) != self.port):
                return response  # cross-origin (e.g. logical https base); stop here
            current_path = split.path + (f"?{split.query}" if split.query else "")
            if response.status in (301, 302, 303):
                current_method, current_body = "GET", b""
        raise AssertionError(f"redirect loop beyond {max_redirects} hops")

    def get(self, path: str, follow: bool = False, headers=None) -> HttpResponse:
        return self.request("GET", path, headers=headers, follow=follow)

    def post(self, path: str, body: bytes = b"", content_type: str = "application/x-www-form-urlencoded", follow: bool = False) -> HttpResponse:
        return self.request("POST", path, headers=[("Content-Type", content_type)], body=body, follow=follow)

    def post_json(self, path: str, follow: bool = False) -> HttpResponse:
        return self.request("POST", path, headers=[("Content-Type", "application/json")], follow=follow)

    def login(self, username: str, password: str, next_url: str = "/app") -> HttpResponse:
        body = f"username={username}&password={password}&next={next_url}".encode()
        response = self.post("/_login", body)
        assert response.status == 302, f"login failed: {response.status} {response.body!r}"
        return response
