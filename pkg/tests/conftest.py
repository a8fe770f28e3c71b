from __future__ import annotations

import pytest

from workhub.auth import (
    CountingKeyProvider,
    InMemoryKeyProvider,
    TokenClaims,
    generate_signing_key,
    mint_token,
    public_key_pem,
)
from workhub.clock import VirtualClock

T0 = 1_700_000_000.0


@pytest.fixture
def clock() -> VirtualClock:
    return VirtualClock(start=T0)


@pytest.fixture(scope="session")
def signing_key():
    return generate_signing_key()


@pytest.fixture(scope="session")
def signing_pem(signing_key) -> str:
    return public_key_pem(signing_key)


@pytest.fixture
def registry(signing_pem) -> InMemoryKeyProvider:
    reg = InMemoryKeyProvider()
    reg.register("k-001", signing_pem)
    return reg


@pytest.fixture
def provider(registry) -> CountingKeyProvider:
    return CountingKeyProvider(registry)


def make_token(signing_key, sub: str, kid: str = "k-001", exp: float = T0 + 3600.0, **extra) -> str:
    return mint_token(signing_key, TokenClaims(sub=sub, exp=exp, extra=extra), kid)
