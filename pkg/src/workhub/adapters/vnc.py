"""Authentication plugin for the websocket-to-VNC bridge.

Same validation body as verify_jwt; success returns the identity and
admits the upgrade toward the VNC target, failure raises
AuthenticationError. Port exposure policy (web client port only) is
enforced by the container backend, not here.
"""

from __future__ import annotations

from ..auth.verify import (
    KeyCache,
    OidcHeaderSet,
    VerificationFailure,
    VerifiedIdentity,
    verify_jwt,
)
from .home import check_home_ownership

WEB_CLIENT_PORT = 6901
VNC_SERVER_PORT = 5901


class AuthenticationError(Exception):
    pass


def authenticate(
    headers: OidcHeaderSet,
    target_host: str,
    target_port: int,
    cache: KeyCache,
    provider,
    now: float,
    *,
    expected_user: str | None = None,
    home=None,
) -> VerifiedIdentity:
    verdict = verify_jwt(headers, cache, provider, now)
    if isinstance(verdict, VerificationFailure):
        raise AuthenticationError(f"{verdict.reason.value}: {verdict.detail}")
    if expected_user is not None and verdict.oidc_id != expected_user:
        raise AuthenticationError(f"subject-mismatch: {verdict.oidc_id!r} is not the workspace owner")
    if home is not None and not check_home_ownership(home, verdict.oidc_id):
        raise AuthenticationError("home-ownership-check-failed")
    return verdict
