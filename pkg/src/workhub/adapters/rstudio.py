"""RStudio-side session flow: the HMAC-signed `user-id` cookie, the
auth-sign-in capture, and base-path rewriting for a server that cannot be
configured with one.

Wire form is percent-encoded "username|expiry|signature" with "|" exempt;
the signature is base64(HMAC-SHA256(secret, username + expiry)) and the
expiry is the fixed GMT format. Expiry text is formatted with explicit
English tables so output does not depend on the process locale.
"""

from __future__ import annotations

import base64
import datetime
import hashlib
import hmac
import re
from dataclasses import dataclass
from urllib.parse import quote, unquote

from ..auth.verify import KeyCache, OidcHeaderSet, VerificationFailure, verify_jwt
from .home import check_home_ownership

COOKIE_NAME = "user-id"
DEFAULT_USERNAME = "rstudio"
DEFAULT_SECRET_PATH = "/var/lib/rstudio-server/secure-cookie-key"
EXPIRY_FORMAT = "%a, %d %b %Y %H:%M:%S GMT"
PING_PATH = "/ping"
SIGNIN_SEGMENT = "auth-sign-in"

_WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_EXPIRY_RE = re.compile(
    r"^(?P<wd>[A-Z][a-z]{2}), (?P<day>\d{2}) (?P<mon>[A-Z][a-z]{2}) (?P<year>\d{4}) "
    r"(?P<h>\d{2}):(?P<m>\d{2}):(?P<s>\d{2}) GMT$"
)


class CookieError(Exception):
    pass


class MalformedCookieError(CookieError):
    pass


class BadSignatureError(CookieError):
    pass


class ExpiredCookieError(CookieError):
    pass


def format_expiry(moment: datetime.datetime) -> str:
    return (
        f"{_WEEKDAYS[moment.weekday()]}, {moment.day:02d} {_MONTHS[moment.month - 1]} "
        f"{moment.year:04d} {moment.hour:02d}:{moment.minute:02d}:{moment.second:02d} GMT"
    )


def parse_expiry(text: str) -> datetime.datetime:
    match = _EXPIRY_RE.match(text)
    if not match or match.group("wd") not in _WEEKDAYS or match.group("mon") not in _MONTHS:
        raise ValueError(f"unparseable expiry {text!r}")
    return datetime.datetime(
        int(match.group("year")),
        _MONTHS.index(match.group("mon")) + 1,
        int(match.group("day")),
        int(match.group("h")),
        int(match.group("m")),
        int(match.group("s")),
    )


def compute_signature(secret: bytes, username: str, expiry_text: str) -> str:
    digest = hmac.new(secret, f"{username}{expiry_text}".encode("utf-8"), hashlib.sha256).digest()
    return base64.b64encode(digest).decode("ascii")


@dataclass(frozen=True)
class SignedCookie:
    username: str
    expiry: str
    signature: str

    def wire(self) -> str:
        return quote(f"{self.username}|{self.expiry}|{self.signature}", "|")


def mint_cookie(username: str, days: int, secret: bytes, now: datetime.datetime) -> str:
    """Wire string for a cookie expiring `days` from now (naive UTC)."""
    if days <= 0:
        raise ValueError("cookie lifetime must be at least one day")
    if not secret:
        raise ValueError("cookie secret must be non-empty")
    if "|" in username:
        raise ValueError("username may not contain the field separator")
    expiry_text = format_expiry(now + datetime.timedelta(days))
    return SignedCookie(username, expiry_text, compute_signature(secret, username, expiry_text)).wire()


def verify_cookie(wire: str, secret: bytes, now: datetime.datetime) -> str:
    """Return the username for a well-signed, unexpired cookie.

    Signature comparison is constant-time and happens before the expiry
    check, mirroring the mint algorithm inverted.
    """
    parts = unquote(wire).split("|")
    if len(parts) != 3:
        raise MalformedCookieError("cookie does not have exactly three fields")
    username, expiry_text, signature = parts
    expected = compute_signature(secret, username, expiry_text)
    if not hmac.compare_digest(signature.encode("ascii", "replace"), expected.encode("ascii")):
        raise BadSignatureError("cookie signature mismatch")
    try:
        expiry = parse_expiry(expiry_text)
    except ValueError as exc:
        raise MalformedCookieError(str(exc)) from exc
    if expiry <= now:
        raise ExpiredCookieError(f"cookie expired at {expiry_text}")
    return username


@dataclass(frozen=True)
class SigninResult:
    ok: bool
    set_cookie: str | None = None
    redirect: str | None = None
    deny_reason: str | None = None


def auth_signin(
    headers: OidcHeaderSet,
    expected_user: str,
    secret: bytes,
    now: float,
    *,
    cache: KeyCache,
    provider,
    app_prefix: str,
    cookie_days: int = 1,
    cookie_username: str = DEFAULT_USERNAME,
    home=None,
) -> SigninResult:
    """Validate the gateway headers; on success set the session cookie and
    redirect into the application behind its prefix.

    The cookie username stays the container default regardless of the
    verified identity; expected_user and the home marker gate who may use
    this container at all.
    """
    verdict = verify_jwt(headers, cache, provider, now)
    if isinstance(verdict, VerificationFailure):
        return SigninResult(ok=False, deny_reason=verdict.reason.value)
    if verdict.oidc_id != expected_user:
        return SigninResult(ok=False, deny_reason=f"subject-mismatch: {verdict.oidc_id!r} is not the workspace owner")
    if home is not None and not check_home_ownership(home, verdict.oidc_id):
        return SigninResult(ok=False, deny_reason="home-ownership-check-failed")
    moment = datetime.datetime.fromtimestamp(now, datetime.timezone.utc).replace(tzinfo=None)
    wire = mint_cookie(cookie_username, cookie_days, secret, moment)
    set_cookie = f"{COOKIE_NAME}={wire}; Secure; HttpOnly; Path={app_prefix}"
    return SigninResult(ok=True, set_cookie=set_cookie, redirect=f"{app_prefix}/")


def rewrite_prefix(prefix: str, request_path: str) -> str | None:
    """Strip the proxy prefix from a request path; None when outside it."""
    if request_path == prefix:
        return "/"
    if request_path.startswith(prefix + "/"):
        return request_path[len(prefix):]
    return None


def reapply_prefix(prefix: str, upstream_path: str) -> str:
    """Reverse mapping used on upstream redirects."""
    if upstream_path == "/":
        return prefix
    return prefix + upstream_path
