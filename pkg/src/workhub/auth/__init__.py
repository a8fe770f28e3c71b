"""Token minting, key distribution, and the two-tier validation used by the
gateway and every workspace application."""

from .errors import (
    AuthError,
    KeyNotFoundError,
    MalformedTokenError,
    MissingKeyIdError,
    ProviderUnreachableError,
    SignatureInvalidError,
)
from .jose import generate_signing_key, public_key_pem
from .keys import (
    CountingKeyProvider,
    HttpKeyProvider,
    InMemoryKeyProvider,
    KeyProvider,
    KeyServer,
)
from .verify import (
    DEFAULT_ALGORITHM,
    DEFAULT_CLOCK_SKEW,
    HEADER_ACCESS_TOKEN,
    HEADER_DATA,
    HEADER_IDENTITY,
    OIDC_HEADER_PREFIX,
    FailureReason,
    KeyCache,
    OidcHeaderSet,
    TokenClaims,
    TokenHeader,
    VerificationFailure,
    VerifiedIdentity,
    extract_oidc_headers,
    fetch_public_key,
    mint_token,
    parse_unverified_header,
    verify_jwt,
    verify_oidc,
)

__all__ = [
    "AuthError",
    "CountingKeyProvider",
    "DEFAULT_ALGORITHM",
    "DEFAULT_CLOCK_SKEW",
    "FailureReason",
    "HEADER_ACCESS_TOKEN",
    "HEADER_DATA",
    "HEADER_IDENTITY",
    "HttpKeyProvider",
    "InMemoryKeyProvider",
    "KeyCache",
    "KeyNotFoundError",
    "KeyProvider",
    "KeyServer",
    "MalformedTokenError",
    "MissingKeyIdError",
    "OIDC_HEADER_PREFIX",
    "OidcHeaderSet",
    "ProviderUnreachableError",
    "SignatureInvalidError",
    "TokenClaims",
    "TokenHeader",
    "VerificationFailure",
    "VerifiedIdentity",
    "extract_oidc_headers",
    "fetch_public_key",
    "generate_signing_key",
    "mint_token",
    "parse_unverified_header",
    "public_key_pem",
    "verify_jwt",
    "verify_oidc",
]
