"""Leader-ranking VRF: determinism, uniqueness, and forgery rejection."""

import random

from pvssbft.group import group_setup
from pvssbft.pvss import DleqProof, keygen
from pvssbft.vrf import VrfOutput, vrf_base, vrf_eval, vrf_rank, vrf_verify

G = group_setup("test64")


def test_eval_verifies_and_is_deterministic():
    kp = keygen(G, random.Random(1))
    out1 = vrf_eval(G, kp, 7)
    out2 = vrf_eval(G, kp, 7)
    assert out1 == out2
    assert vrf_verify(G, kp.pk, 7, out1)


def test_output_is_base_to_sk():
    kp = keygen(G, random.Random(2))
    out = vrf_eval(G, kp, 3)
    assert out.value == G.exp(vrf_base(G, 3), kp.sk)
    assert out.rho == vrf_rank(G, out.value)


def test_views_and_keys_give_distinct_ranks():
    rng = random.Random(3)
    kps = [keygen(G, rng) for _ in range(8)]
    ranks = {vrf_eval(G, kp, view).rho for kp in kps for view in range(8)}
    assert len(ranks) == 64


def test_wrong_view_rejected():
    kp = keygen(G, random.Random(4))
    out = vrf_eval(G, kp, 5)
    assert not vrf_verify(G, kp.pk, 6, out)


def test_wrong_key_rejected():
    rng = random.Random(5)
    kp, other = keygen(G, rng), keygen(G, rng)
    out = vrf_eval(G, kp, 1)
    assert not vrf_verify(G, other.pk, 1, out)


def test_forged_value_or_rank_rejected():
    kp = keygen(G, random.Random(6))
    out = vrf_eval(G, kp, 2)
    assert not vrf_verify(G, kp.pk, 2, VrfOutput(G.mul(out.value, G.g), out.rho, out.proof))
    assert not vrf_verify(G, kp.pk, 2, VrfOutput(out.value, (out.rho + 1) % G.q, out.proof))
    bad = DleqProof(out.proof.challenge, (out.proof.response + 1) % G.q)
    assert not vrf_verify(G, kp.pk, 2, VrfOutput(out.value, out.rho, bad))


def test_rank_cannot_be_ground_without_valid_proof():
    # an adversary picking u freely can set rho, but no proof exists for it
    kp = keygen(G, random.Random(7))
    chosen_u = G.exp(G.g, 12345)
    forged = VrfOutput(chosen_u, vrf_rank(G, chosen_u), vrf_eval(G, kp, 9).proof)
    assert not vrf_verify(G, kp.pk, 9, forged)
