"""Jupyter login-handler semantics: the GET decision and the per-request
token check backing the notebook's minimal auth scheme.

get_user_token never fetches keys: its cold path requires the kid and
public key to be cached already (verify_jwt is where fetching happens), and
the returned hex token is opaque to the rest of the notebook.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass

from ..auth.errors import MalformedTokenError, MissingKeyIdError, SignatureInvalidError
from ..auth.verify import (
    DEFAULT_ALGORITHM,
    DEFAULT_CLOCK_SKEW,
    KeyCache,
    OidcHeaderSet,
    VerifiedIdentity,
    decode_verified_claims,
    expiry_failure,
    parse_unverified_header,
    verify_jwt,
    verify_oidc,
)


@dataclass(frozen=True)
class LoginDecision:
    outcome: str  # "redirect" | "render-login"
    next_url: str | None = None
    session_token: str | None = None


def login_get(
    current_user: str | None,
    headers: OidcHeaderSet,
    base_url: str,
    next_path: str | None,
    *,
    cache: KeyCache,
    provider,
    now: float,
) -> LoginDecision:
    """Authenticated = existing session or valid gateway headers; redirect
    to `next` (default the base url) on success, render the login page
    otherwise."""
    session_token: str | None = None
    authenticated = False
    if current_user:
        authenticated = True
    else:
        verdict = verify_jwt(headers, cache, provider, now)
        if isinstance(verdict, VerifiedIdentity):
            authenticated = True
            session_token = uuid.uuid4().hex
    if authenticated:
        return LoginDecision("redirect", next_path or base_url, session_token)
    return LoginDecision("render-login")


def get_user_token(
    headers: OidcHeaderSet,
    cache: KeyCache,
    provider=None,
    *,
    now: float,
    algorithm: str = DEFAULT_ALGORITHM,
    clock_skew: float = DEFAULT_CLOCK_SKEW,
) -> str | None:
    """Opaque 32-hex token when the request authenticates, else None.

    Fast path is the pure cache check; the cold path decodes with the
    cached public key only. The provider argument is accepted for surface
    symmetry with verify_jwt and is never called.
    """
    if verify_oidc(headers, cache):
        return uuid.uuid4().hex

    token = headers.data
    if not token:
        return None
    try:
        header = parse_unverified_header(token)
    except (MalformedTokenError, MissingKeyIdError):
        return None
    if not (header.kid == cache.kid and cache.pk):
        return None
    try:
        claims = decode_verified_claims(token, cache.pk, algorithm)
    except (MalformedTokenError, SignatureInvalidError):
        return None
    if expiry_failure(claims, now, clock_skew) is not None:
        return None
    oidc_id = headers.identity
    if not oidc_id or claims.get("sub") != oidc_id:
        return None
    cache.jwt = token
    cache.user_id = oidc_id
    return uuid.uuid4().hex
