"""Prime-order group arithmetic over a safe-prime field.

The group is the order-q subgroup of quadratic residues in Z_p*, with
p = 2q + 1.  Two pinned profiles exist: ``test64`` (64-bit q, fast, for
tests and simulation) and ``std256`` (256-bit q, benchmark strength).
Exponentiation is delegated to gmpy2, which is several times faster
than CPython's pow on this workload.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from typing import Dict, Iterable, Sequence

import gmpy2

__all__ = [
    "Group",
    "GroupError",
    "DeserializationError",
    "group_setup",
    "PROFILES",
]

# Pinned safe-prime pairs (p = 2q + 1, both prime).  Regenerate with a
# Miller-Rabin search if a new profile is ever needed; tests re-verify
# primality independently.
TEST64_Q = 0xC94D21139F7CF853
TEST64_P = 0x1929A42273EF9F0A7
STD256_Q = 0xFD5F6A17D1F406F65FCC3969829C2624330887E9CC8692E539CB0C9D6B0F7717
STD256_P = 0x1FABED42FA3E80DECBF9872D305384C4866110FD3990D25CA7396193AD61EEE2F

# 2 is not +-1 mod p, so its square generates the full QR subgroup.
DEFAULT_GENERATOR = 4

GROUP_TAG = "PVSS-G"


class GroupError(ValueError):
    """Invalid group input (bad scalar range, non-member element)."""


class DeserializationError(GroupError):
    """Byte string does not decode to a valid scalar or group element."""


def _frame(tag: str, chunks: Iterable[bytes]) -> bytes:
    # Unambiguous framing: 4-byte big-endian length before every part.
    tag_b = tag.encode("utf-8")
    out = [struct.pack(">I", len(tag_b)), tag_b]
    for chunk in chunks:
        out.append(struct.pack(">I", len(chunk)))
        out.append(chunk)
    return b"".join(out)


@dataclass(frozen=True)
class Group:
    """Group parameters plus the arithmetic used by every other module.

    ``g`` is the public generator; ``G`` is a second generator with
    unknown discrete log relative to ``g``, derived by hashing the
    parameters into the group.  Scalars are ints in [0, q); elements
    are ints in [1, p) lying in the order-q subgroup.
    """

    name: str
    q: int
    p: int
    g: int
    G: int = 0
    _mp: gmpy2.mpz = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_mp", gmpy2.mpz(self.p))
        if self.G == 0:
            params = (
                self.p.to_bytes(self.element_bytes, "big")
                + self.q.to_bytes(self.element_bytes, "big")
                + self.g.to_bytes(self.element_bytes, "big")
            )
            object.__setattr__(self, "G", self.hash_to_group(GROUP_TAG, params))

    # -- sizes ---------------------------------------------------------

    @property
    def scalar_bytes(self) -> int:
        return (self.q.bit_length() + 7) // 8

    @property
    def element_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8

    # -- arithmetic ----------------------------------------------------

    def exp(self, base: int, exponent: int) -> int:
        """base**exponent mod p (exponent reduced mod q by caller convention)."""
        return int(gmpy2.powmod(base, exponent, self._mp))

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def inv_element(self, a: int) -> int:
        return int(gmpy2.invert(a, self._mp))

    def inv_scalar(self, s: int) -> int:
        if s % self.q == 0:
            raise GroupError("zero scalar has no inverse")
        return int(gmpy2.invert(s, self.q))

    def is_member(self, x: int) -> bool:
        return 0 < x < self.p and gmpy2.powmod(x, self.q, self._mp) == 1

    # -- hashing -------------------------------------------------------

    def hash_to_scalar(self, tag: str, *chunks: bytes) -> int:
        """Map framed bytes to a scalar in [0, q); tags separate domains."""
        digest = hashlib.sha512(_frame(tag, chunks)).digest()
        return int.from_bytes(digest, "big") % self.q

    def hash_to_group(self, tag: str, *chunks: bytes) -> int:
        """Map framed bytes to a non-identity subgroup member.

        Squaring a field element lands in the QR subgroup; 0 and 1 are
        re-hashed with a counter so the identity is never returned.
        """
        counter = 0
        framed = _frame(tag, chunks)
        while True:
            digest = hashlib.sha512(framed + struct.pack(">I", counter)).digest()
            x = int.from_bytes(digest, "big") % self.p
            e = x * x % self.p
            if e > 1:
                return e
            counter += 1

    # -- randomness ----------------------------------------------------

    def random_scalar(self, rng) -> int:
        """Uniform nonzero scalar, via rejection sampling on getrandbits.

        getrandbits is stable across platforms and Python versions, so
        seeded streams replay identically.
        """
        bits = self.q.bit_length()
        while True:
            s = rng.getrandbits(bits)
            if 0 < s < self.q:
                return s

    # -- Lagrange interpolation at zero --------------------------------

    def lagrange_at_zero(self, indices: Sequence[int]) -> Dict[int, int]:
        """Coefficients lambda_i with sum lambda_i * p(i) = p(0) mod q."""
        idx = list(indices)
        if len(set(idx)) != len(idx):
            raise GroupError("duplicate share indices")
        coeffs: Dict[int, int] = {}
        for i in idx:
            num = 1
            den = 1
            for j in idx:
                if j == i:
                    continue
                num = num * j % self.q
                den = den * (j - i) % self.q
            coeffs[i] = num * self.inv_scalar(den) % self.q
        return coeffs

    # -- canonical encodings -------------------------------------------

    def encode_scalar(self, s: int) -> bytes:
        if not 0 <= s < self.q:
            raise GroupError(f"scalar out of range: {s}")
        return s.to_bytes(self.scalar_bytes, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_bytes:
            raise DeserializationError(
                f"scalar must be {self.scalar_bytes} bytes, got {len(data)}"
            )
        s = int.from_bytes(data, "big")
        if s >= self.q:
            raise DeserializationError("scalar not reduced mod q")
        return s

    def encode_element(self, e: int) -> bytes:
        if not 0 < e < self.p:
            raise GroupError(f"element out of range: {e}")
        return e.to_bytes(self.element_bytes, "big")

    def decode_element(self, data: bytes) -> int:
        if len(data) != self.element_bytes:
            raise DeserializationError(
                f"element must be {self.element_bytes} bytes, got {len(data)}"
            )
        e = int.from_bytes(data, "big")
        if not self.is_member(e):
            raise DeserializationError("bytes do not encode a subgroup member")
        return e


PROFILES = {
    "test64": (TEST64_Q, TEST64_P),
    "std256": (STD256_Q, STD256_P),
}

_CACHE: Dict[str, Group] = {}


def group_setup(profile: str = "test64") -> Group:
    """Return the pinned group for a named profile (cached; groups are frozen)."""
    if profile not in PROFILES:
        raise GroupError(f"unknown group profile: {profile!r} (want one of {sorted(PROFILES)})")
    if profile not in _CACHE:
        q, p = PROFILES[profile]
        _CACHE[profile] = Group(name=profile, q=q, p=p, g=DEFAULT_GENERATOR)
    return _CACHE[profile]
