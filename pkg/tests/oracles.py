"""Independent verification oracles.

These deliberately share no code path with the package: token verification
re-implements base64url handling, JSON parsing and the P-256 ECDSA group
math from the curve constants; the cookie oracle recomputes the HMAC wire
format with the stdlib. `cryptography` appears only to pull the public-key
coordinates out of a PEM, never to verify.
"""

from __future__ import annotations

import base64
import binascii
import datetime
import hashlib
import hmac
import json
from urllib.parse import quote

from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.serialization import load_pem_public_key

# NIST P-256 domain parameters.
_P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
_A = _P - 3
_B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
_N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
_GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
_GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5

_INF = None


def _point_add(p1, p2):
    if p1 is _INF:
        return p2
    if p2 is _INF:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2 and (y1 + y2) % _P == 0:
        return _INF
    if p1 == p2:
        lam = (3 * x1 * x1 + _A) * pow(2 * y1, -1, _P) % _P
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, _P) % _P
    x3 = (lam * lam - x1 - x2) % _P
    y3 = (lam * (x1 - x3) - y1) % _P
    return (x3, y3)


def _scalar_mult(k: int, point):
    result = _INF
    addend = point
    while k:
        if k & 1:
            result = _point_add(result, addend)
        addend = _point_add(addend, addend)
        k >>= 1
    return result


def _b64url(segment: str) -> bytes:
    padded = segment + "=" * (-len(segment) % 4)
    return base64.urlsafe_b64decode(padded.encode("ascii"))


class OracleReject(Exception):
    pass


def oracle_verify_token(token: str, public_pem: str, identity: str, now: float) -> dict:
    """Independently verify an ES256 compact token.

    Returns the claims on success; raises OracleReject otherwise. Checks:
    structure, alg, signature over header.claims, exp strictly in the
    future, sub equal to the identity header value.
    """
    parts = token.split(".")
    if len(parts) != 3:
        raise OracleReject("structure")
    try:
        header = json.loads(_b64url(parts[0]))
        claims = json.loads(_b64url(parts[1]))
        signature = _b64url(parts[2])
    except (ValueError, binascii.Error) as exc:
        raise OracleReject(f"decode: {exc}") from exc
    if header.get("alg") != "ES256":
        raise OracleReject("alg")
    if len(signature) != 64:
        raise OracleReject("signature length")
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:], "big")
    if not (1 <= r < _N and 1 <= s < _N):
        raise OracleReject("signature range")

    key = load_pem_public_key(public_pem.encode("ascii"))
    assert isinstance(key, ec.EllipticCurvePublicKey)
    numbers = key.public_numbers()
    q = (numbers.x, numbers.y)

    digest = hashlib.sha256(f"{parts[0]}.{parts[1]}".encode("ascii")).digest()
    e = int.from_bytes(digest, "big")
    w = pow(s, -1, _N)
    u1 = e * w % _N
    u2 = r * w % _N
    point = _point_add(_scalar_mult(u1, (_GX, _GY)), _scalar_mult(u2, q))
    if point is _INF or point[0] % _N != r:
        raise OracleReject("signature")

    exp = claims.get("exp")
    if not isinstance(exp, (int, float)) or now >= exp:
        raise OracleReject("expired")
    if claims.get("sub") != identity:
        raise OracleReject("subject")
    return claims


def oracle_rstudio_cookie(username: str, days: int, secret: bytes, now: datetime.datetime) -> str:
    """Recompute the signed-cookie wire form exactly as the reference
    snippet does: strftime expiry, HMAC-SHA256 over username+expiry,
    base64 digest, percent-encoding with '|' exempt."""
    expiry = now + datetime.timedelta(days)
    expiry_text = expiry.strftime("%a, %d %b %Y %H:%M:%S GMT")
    dig = base64.b64encode(
        hmac.new(secret, "{0}{1}".format(username, expiry_text).encode("utf-8"), hashlib.sha256).digest()
    )
    return quote("{0}|{1}|{2}".format(username, expiry_text, dig.decode("ascii")), "|")
