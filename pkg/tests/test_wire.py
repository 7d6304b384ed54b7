"""Wire codec round trips, byte stability, and malformed-input rejection."""

import random

import pytest

from pvssbft.group import DeserializationError, group_setup
from pvssbft.pvss import decrypt_share, keygen, split
from pvssbft.vrf import vrf_eval
from pvssbft.wire import (
    GENESIS_HASH,
    TAG_AWAKE,
    AwakeMsg,
    Block,
    ConfirmMsg,
    Precommit,
    ProposeMsg,
    RecoverMsg,
    ShareForwardMsg,
    VoteMsg,
    block_digest,
    decode_deal,
    decode_message,
    encode_deal,
    encode_message,
    proposal_digest,
    vote_digest,
)

G = group_setup("test64")


def sample_deal(seed=0, n=4, t=3):
    rng = random.Random(seed)
    keys = {i: keygen(G, rng) for i in range(1, n + 1)}
    deal = split(G, G.random_scalar(rng), {i: kp.pk for i, kp in keys.items()}, t, rng)
    return keys, deal


def sample_messages():
    rng = random.Random(9)
    keys, deal = sample_deal()
    kp = keys[1]
    block = Block(parent_hash=GENESIS_HASH, view=1, payload=(5, 9, 12), proposer=1)
    pc = Precommit(node=1, view=1, intent=True)
    ds = decrypt_share(G, kp, 1, deal.enc_shares[1])
    return [
        ProposeMsg(view=1, block=block, deal=deal, vrf=vrf_eval(G, kp, 1), precommit=pc, sender=1),
        ShareForwardMsg(
            view=1, leader=2, enc_share=deal.enc_shares[1], dec_share=ds,
            awake_list=(1, 2, 4), next_round_commit=(1, 2), sender=1,
        ),
        VoteMsg(view=1, vote=True, vote_deal=deal, sender=3),
        ConfirmMsg(view=1, block_hash=block_digest(block), sender=2),
        AwakeMsg(node=4, view=2, sender=4),
        RecoverMsg(recover_view=1, shares={2: ds, 3: ds}, sender=1),
    ]


def test_message_roundtrips():
    for msg in sample_messages():
        assert decode_message(G, encode_message(G, msg)) == msg


def test_encoding_is_byte_stable():
    for msg in sample_messages():
        assert encode_message(G, msg) == encode_message(G, msg)


def test_tag_bytes_are_pinned():
    tags = [encode_message(G, m)[0] for m in sample_messages()]
    assert tags == [1, 2, 3, 4, 5, 6]


def test_deal_roundtrip():
    _, deal = sample_deal(seed=3, n=6, t=4)
    assert decode_deal(G, encode_deal(G, deal)) == deal


def test_digests_are_32_bytes_and_commit_to_fields():
    block = Block(parent_hash=GENESIS_HASH, view=1, payload=(5,), proposer=1)
    pc = Precommit(node=1, view=1, intent=True)
    h = proposal_digest(block, pc)
    assert len(h) == 32 and len(block_digest(block)) == 32
    # any field change moves the digest
    assert proposal_digest(Block(GENESIS_HASH, 2, (5,), 1), pc) != h
    assert proposal_digest(Block(GENESIS_HASH, 1, (6,), 1), pc) != h
    assert proposal_digest(Block(GENESIS_HASH, 1, (5,), 2), pc) != h
    assert proposal_digest(block, Precommit(1, 1, False)) != h
    assert vote_digest(True) != vote_digest(False)


def test_truncated_and_oversized_frames_rejected():
    data = encode_message(G, AwakeMsg(node=1, view=1, sender=1))
    with pytest.raises(DeserializationError):
        decode_message(G, data[:-1])
    with pytest.raises(DeserializationError):
        decode_message(G, data + b"\x00")
    with pytest.raises(DeserializationError):
        decode_message(G, b"")


def test_unknown_tag_rejected():
    data = bytearray(encode_message(G, AwakeMsg(node=1, view=1, sender=1)))
    data[0] = 99
    with pytest.raises(DeserializationError):
        decode_message(G, bytes(data))


def test_non_member_element_rejected():
    msgs = sample_messages()
    data = bytearray(encode_message(G, msgs[2]))  # vote carries a deal
    # first commitment sits after frame(5) + view(8) + flag(1) + t,n,count(12)
    offset = 5 + 8 + 1 + 12
    non_member = (G.p - 1).to_bytes(G.element_bytes, "big")  # order 2, not in subgroup
    data[offset : offset + G.element_bytes] = non_member
    with pytest.raises(DeserializationError):
        decode_message(G, bytes(data))


def test_bad_vote_flag_rejected():
    data = bytearray(encode_message(G, sample_messages()[2]))
    data[5 + 8] = 2
    with pytest.raises(DeserializationError):
        decode_message(G, bytes(data))
