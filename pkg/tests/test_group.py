"""Group arithmetic tests.

The independent oracles here are deliberately primitive: Miller-Rabin
for primality, CPython's built-in pow for exponentiation, and a naive
polynomial evaluation for the Lagrange checks.  The implementation must
agree with them.
"""

import random

import pytest
from hypothesis import given, settings, strategies as st

from pvssbft.group import (
    DeserializationError,
    Group,
    GroupError,
    PROFILES,
    group_setup,
)


# -- oracles -----------------------------------------------------------


def miller_rabin(n: int, rounds: int = 48) -> bool:
    if n < 2:
        return False
    for sp in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % sp == 0:
            return n == sp
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    rng = random.Random(0xBEEF)
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def poly_eval_mod(coeffs, x, q):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % q
    return acc


@pytest.fixture(scope="module")
def grp() -> Group:
    return group_setup("test64")


# -- profile constants -------------------------------------------------


@pytest.mark.parametrize("profile", sorted(PROFILES))
def test_profile_is_safe_prime_pair(profile):
    q, p = PROFILES[profile]
    assert p == 2 * q + 1
    assert miller_rabin(q)
    assert miller_rabin(p)


@pytest.mark.parametrize("profile", sorted(PROFILES))
def test_generators_have_order_q(profile):
    g = group_setup(profile)
    assert pow(g.g, g.q, g.p) == 1 and g.g != 1
    assert pow(g.G, g.q, g.p) == 1 and g.G != 1
    assert g.G != g.g


def test_unknown_profile_rejected():
    with pytest.raises(GroupError):
        group_setup("test32")


# -- arithmetic vs pow oracle ------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**80), st.integers(min_value=0, max_value=2**80))
def test_exp_matches_builtin_pow(a, e):
    g = group_setup("test64")
    base = pow(g.g, a % g.q, g.p)
    assert g.exp(base, e) == pow(base, e, g.p)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=2**64), st.integers(min_value=1, max_value=2**64))
def test_exp_is_homomorphic(a, b):
    g = group_setup("test64")
    a, b = a % g.q, b % g.q
    assert g.mul(g.exp(g.g, a), g.exp(g.g, b)) == g.exp(g.g, (a + b) % g.q)


def test_element_inverse(grp):
    x = grp.exp(grp.g, 12345)
    assert grp.mul(x, grp.inv_element(x)) == 1


def test_scalar_inverse(grp):
    assert 7 * grp.inv_scalar(7) % grp.q == 1
    with pytest.raises(GroupError):
        grp.inv_scalar(0)


# -- hashing -----------------------------------------------------------


def test_hash_to_group_members(grp):
    rng = random.Random(7)
    seen = set()
    for _ in range(100):
        data = rng.getrandbits(128).to_bytes(16, "big")
        e = grp.hash_to_group("t", data)
        assert grp.is_member(e) and e != 1
        seen.add(e)
    assert len(seen) == 100


def test_hash_domain_separation(grp):
    assert grp.hash_to_scalar("a", b"x") != grp.hash_to_scalar("b", b"x")
    assert grp.hash_to_group("a", b"x") != grp.hash_to_group("b", b"x")
    # framing means ("ab", "c") and ("a", "bc") cannot collide
    assert grp.hash_to_scalar("t", b"ab", b"c") != grp.hash_to_scalar("t", b"a", b"bc")


def test_hash_to_scalar_range(grp):
    for i in range(200):
        s = grp.hash_to_scalar("range", i.to_bytes(4, "big"))
        assert 0 <= s < grp.q


def test_derived_generator_is_reproducible():
    g1 = group_setup("test64")
    q, p = PROFILES["test64"]
    g2 = Group(name="test64", q=q, p=p, g=4)
    assert g1.G == g2.G


# -- randomness --------------------------------------------------------


def test_random_scalar_deterministic_per_seed(grp):
    a = [grp.random_scalar(random.Random(5)) for _ in range(3)]
    b = [grp.random_scalar(random.Random(5)) for _ in range(3)]
    assert a == b
    assert all(0 < s < grp.q for s in a)


# -- Lagrange at zero vs polynomial oracle ------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2**32))
def test_lagrange_recovers_constant_term(t, seed):
    g = group_setup("test64")
    rng = random.Random(seed)
    coeffs = [g.random_scalar(rng) for _ in range(t)]
    indices = rng.sample(range(1, 40), t)
    lam = g.lagrange_at_zero(indices)
    acc = 0
    for i in indices:
        acc = (acc + lam[i] * poly_eval_mod(coeffs, i, g.q)) % g.q
    assert acc == coeffs[0]


def test_lagrange_duplicate_indices_rejected(grp):
    with pytest.raises(GroupError):
        grp.lagrange_at_zero([1, 2, 2])


# -- encodings ---------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**64))
def test_scalar_roundtrip(s):
    g = group_setup("test64")
    s %= g.q
    assert g.decode_scalar(g.encode_scalar(s)) == s


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**64))
def test_element_roundtrip(e):
    g = group_setup("test64")
    x = pow(g.g, e % g.q, g.p)
    data = g.encode_element(x)
    assert len(data) == g.element_bytes
    assert g.decode_element(data) == x


def test_decode_rejects_non_members(grp):
    rng = random.Random(99)
    rejected = 0
    for _ in range(200):
        x = rng.randrange(2, grp.p)
        data = x.to_bytes(grp.element_bytes, "big")
        try:
            grp.decode_element(data)
        except DeserializationError:
            rejected += 1
        else:
            # decoding succeeded: must genuinely be a member
            assert pow(x, grp.q, grp.p) == 1
    assert rejected > 0


def test_decode_rejects_bad_lengths(grp):
    with pytest.raises(DeserializationError):
        grp.decode_scalar(b"\x01")
    with pytest.raises(DeserializationError):
        grp.decode_element(b"\x01" * (grp.element_bytes + 1))


def test_decode_rejects_out_of_range_scalar(grp):
    data = grp.q.to_bytes(grp.scalar_bytes, "big")
    with pytest.raises(DeserializationError):
        grp.decode_scalar(data)
