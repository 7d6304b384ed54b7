"""Message types and their canonical byte encodings.

Every message is framed as tag byte, 4-byte big-endian body length,
body.  Bodies use fixed-width big-endian fields (node index 4 bytes,
view 8 bytes) and the group's canonical scalar/element encodings, so
encodings are byte-stable across runs and safe to hash.  Decoding
enforces subgroup membership on every element.

The `sender` field on each message stands in for a signature: the
simulated network stamps it on delivery and never lets one node forge
another's stamp, modelling authenticated channels.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Dict, Tuple, Union

from .group import DeserializationError, Group
from .pvss import DecryptedShare, DleqProof, PvssDeal
from .vrf import VrfOutput

__all__ = [
    "Block",
    "Precommit",
    "ProposeMsg",
    "ShareForwardMsg",
    "VoteMsg",
    "ConfirmMsg",
    "AwakeMsg",
    "RecoverMsg",
    "Message",
    "GENESIS_HASH",
    "DIGEST_SIZE",
    "TAG_PROPOSE",
    "TAG_FORWARD",
    "TAG_VOTE",
    "TAG_CONFIRM",
    "TAG_AWAKE",
    "TAG_RECOVER",
    "block_digest",
    "proposal_digest",
    "vote_digest",
    "encode_deal",
    "decode_deal",
    "encode_message",
    "decode_message",
]

DIGEST_SIZE = 32
GENESIS_HASH = b"\x00" * DIGEST_SIZE

TAG_PROPOSE = 1
TAG_FORWARD = 2
TAG_VOTE = 3
TAG_CONFIRM = 4
TAG_AWAKE = 5
TAG_RECOVER = 6


@dataclass(frozen=True, slots=True)
class Block:
    parent_hash: bytes
    view: int
    payload: Tuple[int, ...]
    proposer: int


@dataclass(frozen=True, slots=True)
class Precommit:
    node: int
    view: int
    intent: bool


@dataclass(frozen=True, slots=True)
class ProposeMsg:
    view: int
    block: Block
    deal: PvssDeal
    vrf: VrfOutput
    precommit: Precommit
    sender: int


@dataclass(frozen=True, slots=True)
class ShareForwardMsg:
    """Phase-2 relay of the share the sender holds in the leader's deal."""

    view: int
    leader: int
    enc_share: int
    dec_share: DecryptedShare
    awake_list: Tuple[int, ...]
    next_round_commit: Tuple[int, ...]
    sender: int


@dataclass(frozen=True, slots=True)
class VoteMsg:
    view: int
    vote: bool
    vote_deal: PvssDeal
    sender: int


@dataclass(frozen=True, slots=True)
class ConfirmMsg:
    view: int
    block_hash: bytes
    sender: int


@dataclass(frozen=True, slots=True)
class AwakeMsg:
    node: int
    view: int
    sender: int


@dataclass(frozen=True, slots=True)
class RecoverMsg:
    """The sender's decrypted shares of other nodes' vote deals.

    Keyed by the voter whose vote deal the share belongs to; broadcast
    when the previous view ended with a reconstruction failure or with
    contradictory votes, so vote secrets can be reopened publicly.
    """

    recover_view: int
    shares: Dict[int, DecryptedShare]
    sender: int


Message = Union[
    ProposeMsg, ShareForwardMsg, VoteMsg, ConfirmMsg, AwakeMsg, RecoverMsg
]


# -- primitive field codecs -------------------------------------------------


def _u32(x: int) -> bytes:
    return x.to_bytes(4, "big")


def _u64(x: int) -> bytes:
    return x.to_bytes(8, "big")


class _Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DeserializationError("truncated message")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return int.from_bytes(self.take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DeserializationError("trailing bytes")


def _encode_block(block: Block) -> bytes:
    if len(block.parent_hash) != DIGEST_SIZE:
        raise ValueError("parent hash must be 32 bytes")
    parts = [block.parent_hash, _u64(block.view), _u32(block.proposer), _u32(len(block.payload))]
    parts.extend(_u64(tx) for tx in block.payload)
    return b"".join(parts)


def _decode_block(r: _Reader) -> Block:
    parent = r.take(DIGEST_SIZE)
    view = r.u64()
    proposer = r.u32()
    count = r.u32()
    payload = tuple(r.u64() for _ in range(count))
    return Block(parent_hash=parent, view=view, payload=payload, proposer=proposer)


def _encode_precommit(pc: Precommit) -> bytes:
    return _u32(pc.node) + _u64(pc.view) + (b"\x01" if pc.intent else b"\x00")


def _decode_precommit(r: _Reader) -> Precommit:
    node = r.u32()
    view = r.u64()
    flag = r.take(1)
    if flag not in (b"\x00", b"\x01"):
        raise DeserializationError("bad intent flag")
    return Precommit(node=node, view=view, intent=flag == b"\x01")


def _encode_proof(group: Group, proof: DleqProof) -> bytes:
    return group.encode_scalar(proof.challenge) + group.encode_scalar(proof.response)


def _decode_proof(group: Group, r: _Reader) -> DleqProof:
    c = group.decode_scalar(r.take(group.scalar_bytes))
    s = group.decode_scalar(r.take(group.scalar_bytes))
    return DleqProof(challenge=c, response=s)


def encode_deal(group: Group, deal: PvssDeal) -> bytes:
    parts = [_u32(deal.t), _u32(deal.n), _u32(len(deal.commitments))]
    parts.extend(group.encode_element(c) for c in deal.commitments)
    parts.append(_u32(len(deal.enc_shares)))
    for i in sorted(deal.enc_shares):
        parts.append(_u32(i))
        parts.append(group.encode_element(deal.enc_shares[i]))
    parts.append(_u32(len(deal.share_proofs)))
    for i in sorted(deal.share_proofs):
        parts.append(_u32(i))
        parts.append(_encode_proof(group, deal.share_proofs[i]))
    return b"".join(parts)


def _decode_deal(group: Group, r: _Reader) -> PvssDeal:
    t = r.u32()
    n = r.u32()
    commitments = tuple(
        group.decode_element(r.take(group.element_bytes)) for _ in range(r.u32())
    )
    enc_shares = {}
    for _ in range(r.u32()):
        i = r.u32()
        enc_shares[i] = group.decode_element(r.take(group.element_bytes))
    proofs = {}
    for _ in range(r.u32()):
        i = r.u32()
        proofs[i] = _decode_proof(group, r)
    return PvssDeal(commitments=commitments, enc_shares=enc_shares, share_proofs=proofs, n=n, t=t)


def decode_deal(group: Group, data: bytes) -> PvssDeal:
    r = _Reader(data)
    deal = _decode_deal(group, r)
    r.done()
    return deal


def _encode_vrf(group: Group, vrf: VrfOutput) -> bytes:
    return (
        group.encode_scalar(vrf.rho)
        + group.encode_element(vrf.value)
        + _encode_proof(group, vrf.proof)
    )


def _decode_vrf(group: Group, r: _Reader) -> VrfOutput:
    rho = group.decode_scalar(r.take(group.scalar_bytes))
    value = group.decode_element(r.take(group.element_bytes))
    proof = _decode_proof(group, r)
    return VrfOutput(value=value, rho=rho, proof=proof)


def _encode_dec_share(group: Group, ds: DecryptedShare) -> bytes:
    return _u32(ds.index) + group.encode_element(ds.value) + _encode_proof(group, ds.proof)


def _decode_dec_share(group: Group, r: _Reader) -> DecryptedShare:
    index = r.u32()
    value = group.decode_element(r.take(group.element_bytes))
    proof = _decode_proof(group, r)
    return DecryptedShare(index=index, value=value, proof=proof)


def _encode_index_set(indices) -> bytes:
    ordered = sorted(indices)
    return b"".join([_u32(len(ordered))] + [_u32(i) for i in ordered])


def _decode_index_tuple(r: _Reader) -> Tuple[int, ...]:
    return tuple(r.u32() for _ in range(r.u32()))


# -- digests -----------------------------------------------------------------


def block_digest(block: Block) -> bytes:
    return hashlib.sha256(_encode_block(block)).digest()


def proposal_digest(block: Block, precommit: Precommit) -> bytes:
    """Digest the proposal binds: block bytes followed by precommit bytes."""
    return hashlib.sha256(_encode_block(block) + _encode_precommit(precommit)).digest()


def vote_digest(vote: bool) -> bytes:
    return hashlib.sha256(b"vote:\x01" if vote else b"vote:\x00").digest()


# -- message frame -----------------------------------------------------------


def encode_message(group: Group, msg: Message) -> bytes:
    if isinstance(msg, ProposeMsg):
        tag = TAG_PROPOSE
        body = (
            _u64(msg.view)
            + _encode_block(msg.block)
            + encode_deal(group, msg.deal)
            + _encode_vrf(group, msg.vrf)
            + _encode_precommit(msg.precommit)
            + _u32(msg.sender)
        )
    elif isinstance(msg, ShareForwardMsg):
        tag = TAG_FORWARD
        body = (
            _u64(msg.view)
            + _u32(msg.leader)
            + group.encode_element(msg.enc_share)
            + _encode_dec_share(group, msg.dec_share)
            + _encode_index_set(msg.awake_list)
            + _encode_index_set(msg.next_round_commit)
            + _u32(msg.sender)
        )
    elif isinstance(msg, VoteMsg):
        tag = TAG_VOTE
        body = (
            _u64(msg.view)
            + (b"\x01" if msg.vote else b"\x00")
            + encode_deal(group, msg.vote_deal)
            + _u32(msg.sender)
        )
    elif isinstance(msg, ConfirmMsg):
        tag = TAG_CONFIRM
        if len(msg.block_hash) != DIGEST_SIZE:
            raise ValueError("block hash must be 32 bytes")
        body = _u64(msg.view) + msg.block_hash + _u32(msg.sender)
    elif isinstance(msg, AwakeMsg):
        tag = TAG_AWAKE
        body = _u32(msg.node) + _u64(msg.view) + _u32(msg.sender)
    elif isinstance(msg, RecoverMsg):
        tag = TAG_RECOVER
        parts = [_u64(msg.recover_view), _u32(len(msg.shares))]
        for voter in sorted(msg.shares):
            parts.append(_u32(voter))
            parts.append(_encode_dec_share(group, msg.shares[voter]))
        parts.append(_u32(msg.sender))
        body = b"".join(parts)
    else:
        raise TypeError(f"not a wire message: {type(msg).__name__}")
    return bytes([tag]) + _u32(len(body)) + body


def decode_message(group: Group, data: bytes) -> Message:
    if len(data) < 5:
        raise DeserializationError("short frame")
    tag = data[0]
    length = int.from_bytes(data[1:5], "big")
    if len(data) != 5 + length:
        raise DeserializationError("frame length mismatch")
    r = _Reader(data[5:])
    if tag == TAG_PROPOSE:
        view = r.u64()
        block = _decode_block(r)
        deal = _decode_deal(group, r)
        vrf = _decode_vrf(group, r)
        precommit = _decode_precommit(r)
        msg: Message = ProposeMsg(
            view=view, block=block, deal=deal, vrf=vrf, precommit=precommit, sender=r.u32()
        )
    elif tag == TAG_FORWARD:
        view = r.u64()
        leader = r.u32()
        enc_share = group.decode_element(r.take(group.element_bytes))
        dec_share = _decode_dec_share(group, r)
        awake_list = _decode_index_tuple(r)
        next_round_commit = _decode_index_tuple(r)
        msg = ShareForwardMsg(
            view=view,
            leader=leader,
            enc_share=enc_share,
            dec_share=dec_share,
            awake_list=awake_list,
            next_round_commit=next_round_commit,
            sender=r.u32(),
        )
    elif tag == TAG_VOTE:
        view = r.u64()
        flag = r.take(1)
        if flag not in (b"\x00", b"\x01"):
            raise DeserializationError("bad vote flag")
        deal = _decode_deal(group, r)
        msg = VoteMsg(view=view, vote=flag == b"\x01", vote_deal=deal, sender=r.u32())
    elif tag == TAG_CONFIRM:
        view = r.u64()
        block_hash = r.take(DIGEST_SIZE)
        msg = ConfirmMsg(view=view, block_hash=block_hash, sender=r.u32())
    elif tag == TAG_AWAKE:
        node = r.u32()
        view = r.u64()
        msg = AwakeMsg(node=node, view=view, sender=r.u32())
    elif tag == TAG_RECOVER:
        view = r.u64()
        shares = {}
        for _ in range(r.u32()):
            voter = r.u32()
            shares[voter] = _decode_dec_share(group, r)
        msg = RecoverMsg(recover_view=view, shares=shares, sender=r.u32())
    else:
        raise DeserializationError(f"unknown tag {tag}")
    r.done()
    return msg
