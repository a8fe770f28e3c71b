"""Token minting, parsing, key retrieval, and the two-tier validation."""

from __future__ import annotations

import socket

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from workhub.auth import (
    CountingKeyProvider,
    HttpKeyProvider,
    InMemoryKeyProvider,
    KeyCache,
    KeyNotFoundError,
    KeyServer,
    MalformedTokenError,
    MissingKeyIdError,
    OidcHeaderSet,
    ProviderUnreachableError,
    FailureReason,
    TokenClaims,
    VerificationFailure,
    VerifiedIdentity,
    extract_oidc_headers,
    fetch_public_key,
    generate_signing_key,
    mint_token,
    parse_unverified_header,
    public_key_pem,
    verify_jwt,
    verify_oidc,
)
from workhub.auth import jose

from .conftest import T0, make_token
from .oracles import OracleReject, oracle_verify_token


def headers_for(token: str, identity: str | None, access: str | None = "opaque") -> OidcHeaderSet:
    return OidcHeaderSet(access_token=access, identity=identity, data=token)


class TestHeaderExtraction:
    def test_all_three_present(self):
        hs = extract_oidc_headers(
            {
                "x-amzn-oidc-identity": "u1",
                "x-amzn-oidc-data": "a.b.c",
                "x-amzn-oidc-accesstoken": "t",
            }
        )
        assert hs == OidcHeaderSet(access_token="t", identity="u1", data="a.b.c")

    def test_empty_input(self):
        assert extract_oidc_headers({}) == OidcHeaderSet()

    def test_case_insensitive_names(self):
        hs = extract_oidc_headers({"X-Amzn-Oidc-Identity": "u1"})
        assert hs.identity == "u1"
        assert hs.data is None
        assert hs.access_token is None


class TestParseUnverifiedHeader:
    def test_round_trip_kid(self, signing_key):
        token = make_token(signing_key, "alice", kid="k-001")
        header = parse_unverified_header(token)
        assert header.kid == "k-001"
        assert header.alg == "ES256"

    def test_garbage_input(self):
        with pytest.raises(MalformedTokenError):
            parse_unverified_header("not-a-token")

    def test_empty_kid(self, signing_key):
        token = make_token(signing_key, "alice", kid="")
        with pytest.raises(MissingKeyIdError):
            parse_unverified_header(token)


class TestFetchPublicKey:
    def test_registered_key_over_http(self, registry, signing_pem):
        server = KeyServer(registry)
        try:
            client = HttpKeyProvider(server.base_url)
            assert fetch_public_key("k-001", client) == signing_pem
        finally:
            server.shutdown()

    def test_absent_kid(self, registry):
        server = KeyServer(registry)
        try:
            client = HttpKeyProvider(server.base_url)
            with pytest.raises(KeyNotFoundError):
                fetch_public_key("absent", client)
        finally:
            server.shutdown()

    def test_closed_endpoint(self):
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()
        client = HttpKeyProvider(f"http://127.0.0.1:{port}/", timeout=0.5)
        with pytest.raises(ProviderUnreachableError):
            fetch_public_key("k-001", client)


class TestVerifyJwt:
    def test_round_trip(self, signing_key, provider, signing_pem):
        token = make_token(signing_key, "alice")
        result = verify_jwt(headers_for(token, "alice"), KeyCache(), provider, now=T0)
        assert isinstance(result, VerifiedIdentity)
        assert result.oidc_id == "alice"
        # independent oracle agrees with the accept
        assert oracle_verify_token(token, signing_pem, "alice", T0)["sub"] == "alice"

    def test_subject_mismatch(self, signing_key, provider):
        token = make_token(signing_key, "alice")
        result = verify_jwt(headers_for(token, "bob"), KeyCache(), provider, now=T0)
        assert result == VerificationFailure(
            FailureReason.SUBJECT_MISMATCH, "user id in token doesn't match user id in header"
        )

    def test_warm_cache_skips_provider(self, signing_key, provider):
        token = make_token(signing_key, "alice")
        cache = KeyCache()
        hs = headers_for(token, "alice")
        assert isinstance(verify_jwt(hs, cache, provider, now=T0), VerifiedIdentity)
        provider.enabled = False
        before = provider.calls
        assert isinstance(verify_jwt(hs, cache, provider, now=T0), VerifiedIdentity)
        assert provider.calls == before

    def test_kid_rotation_evicts_and_refetches(self, signing_key, registry):
        second_key = generate_signing_key()
        registry.register("k-002", public_key_pem(second_key))
        provider = CountingKeyProvider(registry)
        cache = KeyCache()
        first = make_token(signing_key, "alice", kid="k-001")
        assert isinstance(verify_jwt(headers_for(first, "alice"), cache, provider, now=T0), VerifiedIdentity)
        assert provider.calls == 1
        assert cache.kid == "k-001"

        rotated = make_token(second_key, "alice", kid="k-002")
        assert isinstance(verify_jwt(headers_for(rotated, "alice"), cache, provider, now=T0), VerifiedIdentity)
        assert provider.calls == 2
        assert cache.kid == "k-002"

    def test_no_token(self, provider):
        result = verify_jwt(OidcHeaderSet(identity="alice"), KeyCache(), provider, now=T0)
        assert isinstance(result, VerificationFailure)
        assert result.reason is FailureReason.NO_TOKEN

    def test_access_token_alone_is_still_no_token(self, provider):
        # the access token header is carried but never consumed by validation
        result = verify_jwt(
            OidcHeaderSet(identity="alice", access_token="opaque"), KeyCache(), provider, now=T0
        )
        assert isinstance(result, VerificationFailure)
        assert result.reason is FailureReason.NO_TOKEN

    def test_expired(self, signing_key, provider):
        token = make_token(signing_key, "alice", exp=T0 - 3600)
        result = verify_jwt(headers_for(token, "alice"), KeyCache(), provider, now=T0)
        assert isinstance(result, VerificationFailure)
        assert result.reason is FailureReason.EXPIRED

    def test_expiry_within_skew_allowed(self, signing_key, provider):
        token = make_token(signing_key, "alice", exp=T0 - 30)
        result = verify_jwt(headers_for(token, "alice"), KeyCache(), provider, now=T0)
        assert isinstance(result, VerifiedIdentity)

    def test_fast_path_still_checks_expiry(self, signing_key, provider):
        token = make_token(signing_key, "alice", exp=T0 + 100)
        cache = KeyCache()
        hs = headers_for(token, "alice")
        assert isinstance(verify_jwt(hs, cache, provider, now=T0), VerifiedIdentity)
        late = verify_jwt(hs, cache, provider, now=T0 + 500)
        assert isinstance(late, VerificationFailure)
        assert late.reason is FailureReason.EXPIRED

    def test_key_fetch_failure(self, signing_key, registry):
        provider = CountingKeyProvider(registry)
        provider.enabled = False
        token = make_token(signing_key, "alice")
        result = verify_jwt(headers_for(token, "alice"), KeyCache(), provider, now=T0)
        assert isinstance(result, VerificationFailure)
        assert result.reason is FailureReason.KEY_FETCH_FAILED

    def test_unknown_kid(self, signing_key, provider):
        token = make_token(signing_key, "alice", kid="k-unknown")
        result = verify_jwt(headers_for(token, "alice"), KeyCache(), provider, now=T0)
        assert isinstance(result, VerificationFailure)
        assert result.reason is FailureReason.KEY_FETCH_FAILED

    def test_algorithm_confusion_rejected(self, provider):
        # hand-built token claiming HS256 with an arbitrary signature blob
        header = jose.encode_segment({"alg": "HS256", "kid": "k-001", "typ": "JWT"})
        claims = jose.encode_segment({"sub": "alice", "exp": T0 + 3600})
        forged = f"{header}.{claims}.{jose.b64url_encode(b'x' * 64)}"
        result = verify_jwt(headers_for(forged, "alice"), KeyCache(), provider, now=T0)
        assert isinstance(result, VerificationFailure)
        assert result.reason is FailureReason.SIGNATURE_INVALID

    def test_wrong_key_signature(self, registry, provider):
        imposter = generate_signing_key()
        token = make_token(imposter, "alice", kid="k-001")
        result = verify_jwt(headers_for(token, "alice"), KeyCache(), provider, now=T0)
        assert isinstance(result, VerificationFailure)
        assert result.reason is FailureReason.SIGNATURE_INVALID

    def test_tamper_every_claims_byte(self, signing_key, provider, signing_pem):
        token = make_token(signing_key, "alice")
        h64, c64, s64 = token.split(".")
        alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_"
        cache = KeyCache()
        for i in range(len(c64)):
            replacement = alphabet[(alphabet.index(c64[i]) + 1) % len(alphabet)] if c64[i] in alphabet else "A"
            mutated = f"{h64}.{c64[:i] + replacement + c64[i + 1:]}.{s64}"
            result = verify_jwt(headers_for(mutated, "alice"), cache, provider, now=T0)
            assert isinstance(result, VerificationFailure), f"byte {i} accepted"
            assert result.reason in (
                FailureReason.SIGNATURE_INVALID,
                FailureReason.MALFORMED_TOKEN,
                FailureReason.EXPIRED,
                FailureReason.SUBJECT_MISMATCH,
            )
            with pytest.raises(OracleReject):
                oracle_verify_token(mutated, signing_pem, "alice", T0)

    def test_mint_rejects_empty_subject(self, signing_key):
        with pytest.raises(ValueError):
            mint_token(signing_key, TokenClaims(sub="", exp=T0 + 10), "k-001")

    @settings(max_examples=40, deadline=None)
    @given(sub=st.text(min_size=1, max_size=24).filter(lambda s: s.strip()))
    def test_round_trip_property(self, signing_key, signing_pem, sub):
        registry = InMemoryKeyProvider()
        registry.register("k-001", signing_pem)
        token = make_token(signing_key, sub)
        result = verify_jwt(headers_for(token, sub), KeyCache(), CountingKeyProvider(registry), now=T0)
        assert isinstance(result, VerifiedIdentity)
        assert result.oidc_id == sub


class TestVerifyOidc:
    def _warm(self, signing_key, provider) -> tuple[OidcHeaderSet, KeyCache]:
        token = make_token(signing_key, "alice")
        cache = KeyCache()
        hs = headers_for(token, "alice")
        assert isinstance(verify_jwt(hs, cache, provider, now=T0), VerifiedIdentity)
        return hs, cache

    def test_matching_warm_cache(self, signing_key, provider):
        hs, cache = self._warm(signing_key, provider)
        assert verify_oidc(hs, cache) is True

    def test_token_string_differs(self, signing_key, provider):
        hs, cache = self._warm(signing_key, provider)
        other = make_token(signing_key, "alice")
        assert other != hs.data  # ECDSA signatures are randomized
        assert verify_oidc(headers_for(other, "alice"), cache) is False

    def test_empty_headers(self, signing_key, provider):
        _, cache = self._warm(signing_key, provider)
        assert verify_oidc(OidcHeaderSet(), cache) is False

    def test_kid_mismatch(self, signing_key, provider):
        hs, cache = self._warm(signing_key, provider)
        cache.kid = "k-other"
        assert verify_oidc(hs, cache) is False

    def test_never_touches_provider_or_cache(self, signing_key, provider):
        hs, cache = self._warm(signing_key, provider)
        before_calls = provider.calls
        snapshot = (cache.kid, cache.pk, cache.user_id, cache.jwt)
        verify_oidc(hs, cache)
        verify_oidc(headers_for(hs.data, "bob"), cache)
        verify_oidc(OidcHeaderSet(), cache)
        assert provider.calls == before_calls
        assert (cache.kid, cache.pk, cache.user_id, cache.jwt) == snapshot


class TestOracleAgreement:
    """The oracle and verify_jwt agree on accepts and rejects."""

    def test_oracle_accepts_minted_tokens(self, signing_key, signing_pem, registry):
        import random

        rng = random.Random(7)
        for _ in range(25):
            sub = f"user-{rng.randrange(10_000)}"
            exp = T0 + rng.choice([-7200, 3600, 86400])
            token = make_token(signing_key, sub, exp=exp)
            provider = CountingKeyProvider(registry)
            verdict = verify_jwt(headers_for(token, sub), KeyCache(), provider, now=T0)
            if exp > T0:
                assert isinstance(verdict, VerifiedIdentity)
                assert oracle_verify_token(token, signing_pem, sub, T0)["sub"] == sub
            else:
                assert verdict == VerificationFailure(FailureReason.EXPIRED, "token expired")
                with pytest.raises(OracleReject):
                    oracle_verify_token(token, signing_pem, sub, T0)
