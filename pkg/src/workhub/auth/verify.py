"""Gateway-token validation: header extraction, the single-entry key cache,
and the two-tier check (cached fast path plus full signature verification).

Each workspace container serves exactly one user, so the cache holds at
most one (user, token) pair and one public key. The verifier is pure given
(headers, cache, provider, now); callers serialize writes to the shared
cache.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

from cryptography.hazmat.primitives.asymmetric import ec

from . import jose
from .errors import (
    KeyNotFoundError,
    MalformedTokenError,
    MissingKeyIdError,
    ProviderUnreachableError,
    SignatureInvalidError,
)
from .keys import KeyProvider

HEADER_ACCESS_TOKEN = "x-amzn-oidc-accesstoken"
HEADER_IDENTITY = "x-amzn-oidc-identity"
HEADER_DATA = "x-amzn-oidc-data"
OIDC_HEADER_PREFIX = "x-amzn-oidc-"

DEFAULT_ALGORITHM = "ES256"
DEFAULT_CLOCK_SKEW = 60.0


@dataclass(frozen=True)
class OidcHeaderSet:
    """The three gateway-injected header values; None when a header is absent."""

    access_token: str | None = None
    identity: str | None = None
    data: str | None = None


@dataclass(frozen=True)
class TokenHeader:
    kid: str
    alg: str


@dataclass(frozen=True)
class TokenClaims:
    sub: str
    exp: float
    extra: Mapping[str, object] = field(default_factory=dict)


@dataclass
class KeyCache:
    """Single-entry validation cache, one per workspace container."""

    kid: str | None = None
    pk: str | None = None
    user_id: str | None = None
    jwt: str | None = None


@dataclass(frozen=True)
class VerifiedIdentity:
    oidc_id: str
    token: str


class FailureReason(str, Enum):
    NO_TOKEN = "no-token"
    MALFORMED_TOKEN = "malformed-token"
    MISSING_KEY_ID = "missing-key-id"
    KEY_FETCH_FAILED = "key-fetch-failed"
    SIGNATURE_INVALID = "signature-invalid"
    SUBJECT_MISMATCH = "subject-mismatch"
    EXPIRED = "expired"


@dataclass(frozen=True)
class VerificationFailure:
    reason: FailureReason
    detail: str = ""


def extract_oidc_headers(request_headers) -> OidcHeaderSet:
    """Pull the three OIDC headers out of a name->value multimap.

    Names match case-insensitively; absent headers stay None. Values are
    not validated here.
    """
    found: dict[str, str] = {}
    items = request_headers.items() if hasattr(request_headers, "items") else request_headers
    for name, value in items:
        low = name.lower()
        if low in (HEADER_ACCESS_TOKEN, HEADER_IDENTITY, HEADER_DATA) and low not in found:
            found[low] = value
    return OidcHeaderSet(
        access_token=found.get(HEADER_ACCESS_TOKEN),
        identity=found.get(HEADER_IDENTITY),
        data=found.get(HEADER_DATA),
    )


def parse_unverified_header(token: str) -> TokenHeader:
    """Decode only the header segment; no signature check.

    Raises MalformedTokenError for undecodable input and MissingKeyIdError
    when the header carries no kid.
    """
    h64, _, _ = jose.split_token(token)
    header = jose.decode_json_segment(h64)
    kid = header.get("kid")
    if not kid or not isinstance(kid, str):
        raise MissingKeyIdError("no key id in token header")
    alg = header.get("alg")
    return TokenHeader(kid=kid, alg=alg if isinstance(alg, str) else "")


def fetch_public_key(kid: str, provider: KeyProvider) -> str:
    """Fetch the public-key text the provider serves for kid."""
    if not kid:
        raise KeyNotFoundError("empty key id")
    return provider.get_key(kid)


def mint_token(
    idp_key: ec.EllipticCurvePrivateKey,
    claims: TokenClaims,
    kid: str,
    algorithm: str = DEFAULT_ALGORITHM,
) -> str:
    """Produce a compact token the verifier accepts when the identity header
    equals claims.sub and the kid's key is available."""
    if not claims.sub:
        raise ValueError("refusing to mint a token with an empty subject")
    if algorithm != DEFAULT_ALGORITHM:
        raise ValueError(f"unsupported signing algorithm {algorithm!r}")
    header = {"alg": algorithm, "typ": "JWT", "kid": kid}
    payload: dict[str, object] = dict(claims.extra)
    payload["sub"] = claims.sub
    payload["exp"] = claims.exp
    signing_input = f"{jose.encode_segment(header)}.{jose.encode_segment(payload)}"
    signature = jose.sign_es256(signing_input.encode("ascii"), idp_key)
    return f"{signing_input}.{jose.b64url_encode(signature)}"


def decode_verified_claims(token: str, public_pem: str, algorithm: str) -> dict:
    """Verify the signature and return the claims object.

    Raises MalformedTokenError or SignatureInvalidError.
    """
    h64, c64, s64 = jose.split_token(token)
    header = jose.decode_json_segment(h64)
    if header.get("alg") != algorithm:
        raise SignatureInvalidError(f"algorithm {header.get('alg')!r} not accepted")
    signature = jose.b64url_decode(s64)
    signing_input = f"{h64}.{c64}".encode("ascii")
    if not jose.verify_es256(signing_input, signature, public_pem):
        raise SignatureInvalidError("signature verification failed")
    return jose.decode_json_segment(c64)


def expiry_failure(claims: Mapping[str, object], now: float, clock_skew: float) -> VerificationFailure | None:
    exp = claims.get("exp")
    if not isinstance(exp, (int, float)) or isinstance(exp, bool):
        return VerificationFailure(FailureReason.EXPIRED, "no-exp-claim")
    if now >= float(exp) + clock_skew:
        return VerificationFailure(FailureReason.EXPIRED, "token expired")
    return None


def verify_jwt(
    headers: OidcHeaderSet,
    cache: KeyCache,
    provider: KeyProvider,
    now: float,
    *,
    algorithm: str = DEFAULT_ALGORITHM,
    clock_skew: float = DEFAULT_CLOCK_SKEW,
) -> VerifiedIdentity | VerificationFailure:
    """Full validation of the gateway headers against the key cache.

    Order: no-token guard; cached fast path; unverified header parse; pk
    eviction on kid change; key fetch if the pk is absent; signature and
    claims verification; expiry; subject-vs-identity-header equality; cache
    update on success.
    """
    token = headers.data
    if not token:
        return VerificationFailure(FailureReason.NO_TOKEN, "no jwt token in header")
    identity = headers.identity

    if cache.user_id is not None and cache.user_id == identity and cache.jwt == token:
        try:
            _, c64, _ = jose.split_token(token)
            cached_claims = jose.decode_json_segment(c64)
        except MalformedTokenError as exc:
            return VerificationFailure(FailureReason.MALFORMED_TOKEN, str(exc))
        expired = expiry_failure(cached_claims, now, clock_skew)
        if expired:
            return expired
        return VerifiedIdentity(oidc_id=identity, token=token)

    try:
        header = parse_unverified_header(token)
    except MissingKeyIdError as exc:
        return VerificationFailure(FailureReason.MISSING_KEY_ID, str(exc))
    except MalformedTokenError as exc:
        return VerificationFailure(FailureReason.MALFORMED_TOKEN, str(exc))

    if header.kid != cache.kid:
        cache.pk = None

    if cache.pk is None:
        try:
            pem = fetch_public_key(header.kid, provider)
        except (KeyNotFoundError, ProviderUnreachableError) as exc:
            return VerificationFailure(FailureReason.KEY_FETCH_FAILED, str(exc))
        cache.pk = pem
        cache.kid = header.kid

    try:
        claims = decode_verified_claims(token, cache.pk, algorithm)
    except SignatureInvalidError as exc:
        return VerificationFailure(FailureReason.SIGNATURE_INVALID, str(exc))
    except MalformedTokenError as exc:
        return VerificationFailure(FailureReason.MALFORMED_TOKEN, str(exc))

    expired = expiry_failure(claims, now, clock_skew)
    if expired:
        return expired

    if claims.get("sub") != identity or identity is None:
        return VerificationFailure(
            FailureReason.SUBJECT_MISMATCH, "user id in token doesn't match user id in header"
        )

    cache.user_id = identity
    cache.jwt = token
    return VerifiedIdentity(oidc_id=identity, token=token)


def verify_oidc(headers: OidcHeaderSet, cache: KeyCache) -> bool:
    """Pure cache check: no provider access, no cache mutation.

    True iff both headers are present, both equal the cached pair, and the
    token's kid equals the cached kid.
    """
    if not headers.identity or not headers.data:
        return False
    if headers.identity != cache.user_id:
        return False
    if headers.data != cache.jwt:
        return False
    try:
        header = parse_unverified_header(headers.data)
    except (MalformedTokenError, MissingKeyIdError):
        return False
    return header.kid == cache.kid
