"""Verifiable random function used for per-view leader ranking.

Evaluation hashes the view label to a group element b, raises it to the
holder's secret key, and proves log_G pk = log_b u with a DLEQ.  The
rank scalar rho is a hash of u, so for a fixed view each key pair has
exactly one provable output: uniqueness comes from the proof tying u to
pk, not from trusting the sender.
"""

from __future__ import annotations

from dataclasses import dataclass

from .group import Group
from .pvss import DleqProof, KeyPair, dleq_prove, dleq_verify

__all__ = ["VrfOutput", "vrf_base", "vrf_eval", "vrf_verify", "vrf_rank"]

BASE_TAG = "VRF-base"
RANK_TAG = "VRF"


@dataclass(frozen=True, slots=True)
class VrfOutput:
    """Group element u, derived rank rho, and proof u = base^sk."""

    value: int
    rho: int
    proof: DleqProof


def vrf_base(group: Group, view: int) -> int:
    return group.hash_to_group(BASE_TAG, view.to_bytes(8, "big"))


def vrf_rank(group: Group, value: int) -> int:
    return group.hash_to_scalar(RANK_TAG, group.encode_element(value))


def vrf_eval(group: Group, keypair: KeyPair, view: int) -> VrfOutput:
    base = vrf_base(group, view)
    u = group.exp(base, keypair.sk)
    proof = dleq_prove(group, group.G, keypair.pk, base, u, keypair.sk)
    return VrfOutput(value=u, rho=vrf_rank(group, u), proof=proof)


def vrf_verify(group: Group, pk: int, view: int, output: VrfOutput) -> bool:
    base = vrf_base(group, view)
    if not dleq_verify(group, group.G, pk, base, output.value, output.proof):
        return False
    return output.rho == vrf_rank(group, output.value)
