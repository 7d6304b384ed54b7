"""Publicly verifiable secret sharing over the safe-prime group.

A dealer splits a scalar secret s with a degree t-1 polynomial p,
publishes commitments C_j = g^{alpha_j} to the coefficients, and for
every recipient i an encrypted share Y_i = pk_i^{p(i)} plus a
discrete-log-equality proof that Y_i matches the public evaluation
X_i = g^{p(i)} derived from the commitments.  Anyone can verify every
share without learning p(i).  Decryption exposes S_i = G^{p(i)} with a
proof, and any t valid decrypted shares recombine to G^s by Lagrange
interpolation in the exponent.  Reconstruction therefore yields the
secret *in the exponent*; callers compare against G^s, never s.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import gmpy2

from .group import Group, GroupError

__all__ = [
    "PvssError",
    "InvalidThreshold",
    "InsufficientShares",
    "KeyPair",
    "DleqProof",
    "PvssDeal",
    "DecryptedShare",
    "keygen",
    "poly_eval",
    "split",
    "commitment_eval",
    "verify_share",
    "decrypt_share",
    "verify_decryption",
    "reconstruct",
    "exp_secret",
    "dleq_prove",
    "dleq_verify",
]


class PvssError(ValueError):
    """Malformed PVSS input."""


class InvalidThreshold(PvssError):
    """Threshold outside 1 <= t <= n."""


class InsufficientShares(PvssError):
    """Fewer than t distinct valid shares supplied to reconstruction."""


@dataclass(frozen=True, slots=True)
class KeyPair:
    """Receiver key: pk = G^sk."""

    sk: int
    pk: int


@dataclass(frozen=True, slots=True)
class DleqProof:
    """Non-interactive proof that two outputs share one discrete log."""

    challenge: int
    response: int


@dataclass(frozen=True, slots=True)
class DecryptedShare:
    """Share index, S_i = G^{p(i)}, and proof it decrypts Y_i under pk_i."""

    index: int
    value: int
    proof: DleqProof


@dataclass(frozen=True, slots=True)
class PvssDeal:
    """Public transcript of one dealing.

    commitments: (C_0 .. C_{t-1}) with C_j = g^{alpha_j}
    enc_shares:  node index -> Y_i = pk_i^{p(i)}
    share_proofs: node index -> proof that log_g X_i = log_{pk_i} Y_i
    """

    commitments: Tuple[int, ...]
    enc_shares: Dict[int, int]
    share_proofs: Dict[int, DleqProof]
    n: int
    t: int


def keygen(group: Group, rng) -> KeyPair:
    sk = group.random_scalar(rng)
    return KeyPair(sk=sk, pk=group.exp(group.G, sk))


def poly_eval(coeffs: Sequence[int], x: int, q: int) -> int:
    """Evaluate sum coeffs[j] * x^j mod q (Horner)."""
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % q
    return acc


# -- DLEQ (Chaum-Pedersen with Fiat-Shamir) ------------------------------

DLEQ_TAG = "DLEQ"
DLEQ_NONCE_TAG = "DLEQ-nonce"


def _challenge(group: Group, base1, out1, base2, out2, a1, a2) -> int:
    enc = group.encode_element
    return group.hash_to_scalar(
        DLEQ_TAG, enc(base1), enc(out1), enc(base2), enc(out2), enc(a1), enc(a2)
    )


def dleq_prove(
    group: Group, base1: int, out1: int, base2: int, out2: int, secret: int
) -> DleqProof:
    """Prove log_{base1} out1 = log_{base2} out2 = secret.

    The nonce is derived from the secret and the statement, so proving
    is deterministic and never reuses a nonce across statements.
    """
    enc = group.encode_element
    w = group.hash_to_scalar(
        DLEQ_NONCE_TAG,
        group.encode_scalar(secret % group.q),
        enc(base1),
        enc(out1),
        enc(base2),
        enc(out2),
    )
    if w == 0:
        w = 1
    a1 = group.exp(base1, w)
    a2 = group.exp(base2, w)
    c = _challenge(group, base1, out1, base2, out2, a1, a2)
    r = (w - c * secret) % group.q
    return DleqProof(challenge=c, response=r)


def dleq_verify(
    group: Group, base1: int, out1: int, base2: int, out2: int, proof: DleqProof
) -> bool:
    if not 0 <= proof.challenge < group.q or not 0 <= proof.response < group.q:
        return False
    for e in (base1, out1, base2, out2):
        if not 0 < e < group.p:
            return False
    mp = group._mp
    c, r = proof.challenge, proof.response
    a1 = int(gmpy2.powmod(base1, r, mp) * gmpy2.powmod(out1, c, mp) % mp)
    a2 = int(gmpy2.powmod(base2, r, mp) * gmpy2.powmod(out2, c, mp) % mp)
    try:
        return _challenge(group, base1, out1, base2, out2, a1, a2) == c
    except GroupError:
        return False


# -- dealing -------------------------------------------------------------


def split(
    group: Group,
    secret: int,
    recipients: Mapping[int, int],
    t: int,
    rng,
    coeffs: Optional[Sequence[int]] = None,
) -> PvssDeal:
    """Deal `secret` to `recipients` (index -> pk) with threshold t.

    Indices are the polynomial evaluation points and must be nonzero
    mod q.  `coeffs` lets callers supply pre-drawn coefficients (the
    constant term is always forced to the secret).
    """
    n = len(recipients)
    if not 1 <= t <= n:
        raise InvalidThreshold(f"threshold {t} invalid for {n} recipients")
    if any(i % group.q == 0 for i in recipients):
        raise PvssError("recipient index must be nonzero mod q")
    secret %= group.q
    if coeffs is None:
        coeffs = [secret] + [group.random_scalar(rng) for _ in range(t - 1)]
    else:
        coeffs = [secret] + [c % group.q for c in list(coeffs)[1:t]]
        if len(coeffs) != t:
            raise PvssError("need t coefficients")
    g = group.g
    commitments = tuple(group.exp(g, a) for a in coeffs)
    enc_shares: Dict[int, int] = {}
    proofs: Dict[int, DleqProof] = {}
    for i, pk in recipients.items():
        p_i = poly_eval(coeffs, i, group.q)
        x_i = group.exp(g, p_i)
        y_i = group.exp(pk, p_i)
        enc_shares[i] = y_i
        proofs[i] = dleq_prove(group, g, x_i, pk, y_i, p_i)
    return PvssDeal(
        commitments=commitments, enc_shares=enc_shares, share_proofs=proofs, n=n, t=t
    )


def commitment_eval(group: Group, commitments: Sequence[int], index: int) -> int:
    """X_i = prod C_j^{i^j}, via Horner in the exponent (small exponents)."""
    mp = group._mp
    powmod = gmpy2.powmod
    acc = gmpy2.mpz(commitments[-1])
    for c in reversed(commitments[:-1]):
        acc = powmod(acc, index, mp) * c % mp
    return int(acc)


def verify_share(
    group: Group,
    pk: int,
    commitments: Sequence[int],
    index: int,
    enc_share: int,
    proof: DleqProof,
    commitment_value: Optional[int] = None,
) -> bool:
    """Check Y_index against the published commitments.

    `commitment_value` short-circuits the X_i derivation when the caller
    has already computed it; the proof check always runs.
    """
    if not commitments or index <= 0:
        return False
    x_i = commitment_value if commitment_value is not None else commitment_eval(
        group, commitments, index
    )
    return dleq_verify(group, group.g, x_i, pk, enc_share, proof)


# -- decryption and reconstruction ---------------------------------------


def decrypt_share(group: Group, keypair: KeyPair, index: int, enc_share: int) -> DecryptedShare:
    """S_i = Y_i^{1/sk} with proof log_G pk = log_{S_i} Y_i (= sk)."""
    s_i = group.exp(enc_share, group.inv_scalar(keypair.sk))
    proof = dleq_prove(group, group.G, keypair.pk, s_i, enc_share, keypair.sk)
    return DecryptedShare(index=index, value=s_i, proof=proof)


def verify_decryption(group: Group, pk: int, enc_share: int, share: DecryptedShare) -> bool:
    return dleq_verify(group, group.G, pk, share.value, enc_share, share.proof)


def reconstruct(group: Group, shares: Mapping[int, int], t: int) -> int:
    """Combine decrypted shares to G^s using the t lowest-indexed ones."""
    if t < 1:
        raise InvalidThreshold(f"threshold {t} invalid")
    if len(shares) < t:
        raise InsufficientShares(f"need {t} shares, have {len(shares)}")
    chosen = sorted(shares)[:t]
    lam = group.lagrange_at_zero(chosen)
    mp = group._mp
    acc = gmpy2.mpz(1)
    for i in chosen:
        acc = acc * gmpy2.powmod(shares[i], lam[i], mp) % mp
    return int(acc)


def exp_secret(group: Group, secret: int) -> int:
    """Lift a scalar to the comparison domain of reconstruction: G^secret."""
    return group.exp(group.G, secret % group.q)
