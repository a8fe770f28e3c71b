"""Token and key-retrieval error types."""

from __future__ import annotations


class AuthError(Exception):
    """Base for token handling failures."""


class MalformedTokenError(AuthError):
    """Input is not a decodable three-part compact token."""


class MissingKeyIdError(AuthError):
    """Token header carries no key id."""


class SignatureInvalidError(AuthError):
    """Signature check failed (bad signature, wrong key, wrong algorithm)."""


class KeyNotFoundError(AuthError):
    """Key provider has no key under the requested id."""


class ProviderUnreachableError(AuthError):
    """Key provider could not be reached or answered with a non-success status."""
