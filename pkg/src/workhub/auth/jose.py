"""Compact-token primitives: base64url segments and ES256 signatures.

Signatures follow the JWS convention for ES256: the raw 64-byte r||s pair,
not DER. The asymmetric math itself is delegated to `cryptography`.
"""

from __future__ import annotations

import base64
import binascii
import json

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)

from .errors import MalformedTokenError

ES256_SIGNATURE_BYTES = 64


def b64url_encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def b64url_decode(text: str) -> bytes:
    padded = text + "=" * (-len(text) % 4)
    try:
        return base64.urlsafe_b64decode(padded.encode("ascii"))
    except (binascii.Error, ValueError, UnicodeEncodeError) as exc:
        raise MalformedTokenError(f"bad base64url segment: {exc}") from exc


def encode_segment(obj: dict) -> str:
    return b64url_encode(json.dumps(obj, separators=(",", ":"), sort_keys=True).encode("utf-8"))


def decode_json_segment(segment: str) -> dict:
    raw = b64url_decode(segment)
    try:
        obj = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedTokenError(f"segment is not JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedTokenError("segment is not a JSON object")
    return obj


def split_token(token: str) -> tuple[str, str, str]:
    parts = token.split(".")
    if len(parts) != 3 or not all(parts):
        raise MalformedTokenError("token is not a three-part compact token")
    return parts[0], parts[1], parts[2]


def generate_signing_key() -> ec.EllipticCurvePrivateKey:
    return ec.generate_private_key(ec.SECP256R1())


def public_key_pem(key: ec.EllipticCurvePrivateKey | ec.EllipticCurvePublicKey) -> str:
    public = key.public_key() if isinstance(key, ec.EllipticCurvePrivateKey) else key
    pem = public.public_bytes(
        serialization.Encoding.PEM,
        serialization.PublicFormat.SubjectPublicKeyInfo,
    )
    return pem.decode("ascii")


def sign_es256(signing_input: bytes, key: ec.EllipticCurvePrivateKey) -> bytes:
    der = key.sign(signing_input, ec.ECDSA(hashes.SHA256()))
    r, s = decode_dss_signature(der)
    return r.to_bytes(32, "big") + s.to_bytes(32, "big")


def verify_es256(signing_input: bytes, signature: bytes, public_pem: str) -> bool:
    if len(signature) != ES256_SIGNATURE_BYTES:
        return False
    try:
        key = serialization.load_pem_public_key(public_pem.encode("ascii"))
    except (ValueError, UnicodeEncodeError):
        return False
    if not isinstance(key, ec.EllipticCurvePublicKey):
        return False
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:], "big")
    try:
        key.verify(encode_dss_signature(r, s), signing_input, ec.ECDSA(hashes.SHA256()))
    except InvalidSignature:
        return False
    except ValueError:
        return False
    return True
