"""Per-node consensus state machine.

A view v occupies four ticks of one second each, starting at 4v:

  tick 4v      members broadcast PROPOSE (block + share deal + VRF +
               pre-commit); awake non-members broadcast AWAKE
  tick 4v+1    proposals arrive; each member validates them, picks the
               leader by highest VRF rank, and broadcasts FORWARD with
               its decrypted leader share and its AWAKE/pre-commit lists
  tick 4v+2    forwards arrive; list tallies fix next-view membership
               candidates; >= t valid shares reconstruct the leader
               secret; members broadcast VOTE (true iff the opened
               secret matches the leader's advertised digest and the
               leader's block extends the local tip)
  tick 4v+3    votes arrive; a member that voted true and sees >= t
               true votes broadcasts CONFIRM with its leader digest
  tick 4v+4    confirms arrive; >= t confirms matching one digest
               decide that block, and the next view begins

All quorums use t = floor(|A(v)|/2) + 1 over the active set A(v), the
same threshold the leader's deal is split with.

Messages are processed from whatever inbox the harness delivers; every
method validates sender membership, view numbers, and deal shape, and
keeps the first message per sender.  Cryptographic checks go through a
CryptoPolicy so a simulation harness can swap in a caching or
construction-validity policy; the default verifies everything.

A node that slept through part of a view simply lacks that view's
inputs: it abstains from the affected phases and resynchronizes from a
peer at a view boundary (handled by the harness via `sync_adopt`).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Set, Tuple

from .group import Group
from .pvss import (
    DecryptedShare,
    KeyPair,
    decrypt_share,
    exp_secret,
    reconstruct,
    split,
    verify_decryption,
    verify_share,
)
from .vrf import VrfOutput, vrf_eval, vrf_verify
from .wire import (
    GENESIS_HASH,
    AwakeMsg,
    Block,
    ConfirmMsg,
    Precommit,
    ProposeMsg,
    RecoverMsg,
    ShareForwardMsg,
    VoteMsg,
    block_digest,
    proposal_digest,
    vote_digest,
)

__all__ = [
    "BLOCK_SECRET_TAG",
    "VOTE_SECRET_TAG",
    "quorum_threshold",
    "select_leader",
    "Evidence",
    "ViewOutcome",
    "ViewState",
    "CryptoPolicy",
    "Node",
]

BLOCK_SECRET_TAG = "block-secret"
VOTE_SECRET_TAG = "vote-secret"

PHASE_PROPOSE = 1
PHASE_FORWARD = 2
PHASE_VOTE = 3
PHASE_CONFIRM = 4


def quorum_threshold(active_size: int) -> int:
    """Strict majority of the active set: floor(|A|/2) + 1."""
    return active_size // 2 + 1


def select_leader(ranks: Dict[int, int]) -> Optional[int]:
    """Highest VRF rank wins; ties go to the lower node index."""
    best = None
    for node in sorted(ranks):
        if best is None or ranks[node] > ranks[best]:
            best = node
    return best


@dataclass(frozen=True, slots=True)
class Evidence:
    view: int
    node: int
    kind: str  # "vote-mismatch" | "unverifiable" | "confirm-equivocation"
    faulty: bool


@dataclass(frozen=True, slots=True)
class ViewOutcome:
    view: int
    status: str  # "decided" | "aborted" | "stalled"
    digest: Optional[bytes]
    behind: bool  # quorum seen but block missing or off my chain
    inconsistent_votes: bool
    reconstruction_failed: bool


@dataclass
class ViewState:
    view: int
    active: frozenset
    t: int
    proposals: Dict[int, ProposeMsg] = field(default_factory=dict)  # V
    digests: Dict[int, bytes] = field(default_factory=dict)
    blocks: Dict[bytes, Block] = field(default_factory=dict)  # by proposal digest
    precom_true: Set[int] = field(default_factory=set)
    awake_heard: Set[int] = field(default_factory=set)
    leader: Optional[int] = None
    leader_digest: Optional[bytes] = None
    my_votes_seen: Dict[int, bool] = field(default_factory=dict)
    vote_deals: Dict[int, object] = field(default_factory=dict)
    tally_joiners: Optional[frozenset] = None
    tally_precom: Optional[frozenset] = None
    my_vote: Optional[bool] = None
    reconstruction_failed: bool = False
    inconsistent_votes: bool = False
    confirm_by_sender: Dict[int, bytes] = field(default_factory=dict)


class CryptoPolicy:
    """Full-verification crypto operations for the protocol.

    Holds the public-key registry and (for the simulation) all key
    pairs.  Deal and VRF construction draw randomness from per
    (node, view, purpose) substreams so runs with one master seed are
    reproducible message for message.
    """

    def __init__(self, group: Group, master_seed: int = 0):
        self.group = group
        self.master_seed = master_seed
        self.registry: Dict[int, int] = {}
        self.keypairs: Dict[int, KeyPair] = {}
        self._vote_elements = {
            flag: exp_secret(group, group.hash_to_scalar(VOTE_SECRET_TAG, vote_digest(flag)))
            for flag in (True, False)
        }

    def register(self, index: int, keypair: KeyPair) -> None:
        self.registry[index] = keypair.pk
        self.keypairs[index] = keypair

    def proposal_digest(self, block: Block, precommit: Precommit) -> bytes:
        return proposal_digest(block, precommit)

    def reset_view_cache(self) -> None:
        """Hook for caching subclasses; called at view boundaries."""

    def forge_shares(self, deal, victims: Iterable[int]):
        """Adversary helper: corrupt the encrypted shares aimed at
        `victims` while leaving commitments and proofs untouched."""
        enc = dict(deal.enc_shares)
        for v in victims:
            enc[v] = self.group.mul(enc[v], self.group.g)
        return type(deal)(
            commitments=deal.commitments,
            enc_shares=enc,
            share_proofs=deal.share_proofs,
            n=deal.n,
            t=deal.t,
        )

    def rng_for(self, node: int, view: int, purpose: str) -> random.Random:
        return random.Random(f"{self.master_seed}:{node}:{view}:{purpose}")

    # -- construction --

    def make_deal(self, dealer: int, view: int, purpose: str, secret: int,
                  recipients: frozenset, t: int):
        rng = self.rng_for(dealer, view, purpose)
        pks = {i: self.registry[i] for i in recipients}
        return split(self.group, secret, pks, t, rng)

    def make_vrf(self, node: int, view: int) -> VrfOutput:
        return vrf_eval(self.group, self.keypairs[node], view)

    def own_enc_share(self, deal, dealer: int, index: int):
        return deal.enc_shares[index]

    def decrypt_for_forward(self, node: int, dealer: int, deal):
        enc = deal.enc_shares[node]
        return enc, decrypt_share(self.group, self.keypairs[node], node, enc)

    def recovery_share(self, holder: int, voter: int, deal) -> DecryptedShare:
        enc = deal.enc_shares[holder]
        return decrypt_share(self.group, self.keypairs[holder], holder, enc)

    # -- verification --

    def deal_shape_ok(self, deal, n: int, t: int, recipients: frozenset) -> bool:
        return (
            deal.n == n
            and deal.t == t
            and len(deal.commitments) == t
            and set(deal.enc_shares) == recipients
            and set(deal.share_proofs) == recipients
        )

    def vrf_ok(self, sender: int, view: int, vrf: VrfOutput) -> bool:
        return vrf_verify(self.group, self.registry[sender], view, vrf)

    def own_share_ok(self, deal, dealer: int, index: int) -> bool:
        return verify_share(
            self.group,
            self.registry[index],
            deal.commitments,
            index,
            deal.enc_shares[index],
            deal.share_proofs[index],
        )

    def share_matches(self, deal, dealer: int, index: int, enc_share) -> bool:
        return deal.enc_shares[index] == enc_share

    def decryption_ok(self, deal, dealer: int, forwarder: int, enc_share,
                      dec: DecryptedShare) -> bool:
        return verify_decryption(self.group, self.registry[forwarder], enc_share, dec)

    def leader_open_matches(self, deal, dealer: int, shares: Dict[int, DecryptedShare],
                            t: int, digest: bytes) -> bool:
        opened = reconstruct(self.group, {i: ds.value for i, ds in shares.items()}, t)
        expected = exp_secret(
            self.group, self.group.hash_to_scalar(BLOCK_SECRET_TAG, digest)
        )
        return opened == expected

    def recovery_share_ok(self, deal, voter: int, holder: int,
                          dec: DecryptedShare) -> bool:
        return verify_decryption(
            self.group, self.registry[holder], deal.enc_shares[holder], dec
        )

    def vote_open(self, deal, voter: int, shares: Dict[int, DecryptedShare],
                  t: int) -> Optional[bool]:
        opened = reconstruct(self.group, {i: ds.value for i, ds in shares.items()}, t)
        for flag, element in self._vote_elements.items():
            if opened == element:
                return flag
        return None


class Node:
    """One validator.  The harness drives the phase methods in tick order
    and owns delivery; every method here is pure local-state logic."""

    def __init__(self, index: int, keypair: KeyPair, policy: CryptoPolicy,
                 genesis_active: frozenset,
                 planned_intent: Optional[Callable[[int], bool]] = None):
        self.index = index
        self.keypair = keypair
        self.policy = policy
        self.group = policy.group
        self.planned_intent = planned_intent or (lambda view: True)
        self.log: List[Tuple[bytes, Block]] = []
        self.chain_digests: Set[bytes] = {GENESIS_HASH}
        self.pending: List[int] = []
        self.pending_set: Set[int] = set()
        self.decided_txs: Set[int] = set()
        self.next_active: Optional[frozenset] = frozenset(genesis_active)
        self.next_active_for: int = 0
        self.cur: Optional[ViewState] = None
        self.prev: Optional[ViewState] = None
        self.deferred_awakes: Set[int] = set()
        self.armed_view: Optional[int] = None
        self.evidence: List[Evidence] = []
        self.need_sync: bool = False
        self.stalled_views: int = 0

    # -- chain helpers --

    def tip(self) -> bytes:
        return self.log[-1][0] if self.log else GENESIS_HASH

    def height(self) -> int:
        return len(self.log)

    def submit_tx(self, txid: int) -> None:
        if txid not in self.pending_set and txid not in self.decided_txs:
            self.pending.append(txid)
            self.pending_set.add(txid)

    def _apply_block(self, block: Block) -> None:
        digest = block_digest(block)
        self.log.append((digest, block))
        self.chain_digests.add(digest)
        for tx in block.payload:
            self.decided_txs.add(tx)
            self.pending_set.discard(tx)
        self.pending = [tx for tx in self.pending if tx not in self.decided_txs]

    # -- view lifecycle --

    def begin_view(self, view: int) -> bool:
        """Install the working state for `view`.  False if this node has
        no membership view to act from (it must sync first)."""
        self.prev = self.cur
        self.cur = None
        if self.next_active is None or self.next_active_for != view:
            # slept past a boundary (or never finalized): membership is stale
            return False
        active = self.next_active
        if not active:
            self.stalled_views += 1
        self.cur = ViewState(view=view, active=active, t=quorum_threshold(len(active)))
        self.cur.awake_heard = {n for n in self.deferred_awakes if n not in active}
        self.deferred_awakes = set()
        return True

    def phase1_propose(self, view: int):
        """PROPOSE when a member, AWAKE otherwise.  None when unsynced."""
        if self.cur is None or self.cur.view != view:
            return AwakeMsg(node=self.index, view=view, sender=self.index)
        if self.index not in self.cur.active:
            return AwakeMsg(node=self.index, view=view, sender=self.index)
        payload = tuple(tx for tx in self.pending if tx not in self.decided_txs)
        block = Block(parent_hash=self.tip(), view=view, payload=payload,
                      proposer=self.index)
        precommit = Precommit(node=self.index, view=view,
                              intent=bool(self.planned_intent(view + 1)))
        h = self.policy.proposal_digest(block, precommit)
        secret = self.group.hash_to_scalar(BLOCK_SECRET_TAG, h)
        deal = self.policy.make_deal(self.index, view, "block", secret,
                                     self.cur.active, self.cur.t)
        vrf = self.policy.make_vrf(self.index, view)
        return ProposeMsg(view=view, block=block, deal=deal, vrf=vrf,
                          precommit=precommit, sender=self.index)

    def handle_awake(self, msg: AwakeMsg, phase: int) -> None:
        if msg.node != msg.sender:
            return
        if self.cur is None:
            self.deferred_awakes.add(msg.node)
            return
        if msg.node in self.cur.active:
            return
        if phase <= PHASE_FORWARD:
            self.cur.awake_heard.add(msg.node)
        else:
            self.deferred_awakes.add(msg.node)

    def phase2_process(self, proposals: Iterable[ProposeMsg],
                       awakes: Iterable[AwakeMsg]):
        """Validate proposals, elect the leader, emit my FORWARD."""
        for msg in awakes:
            self.handle_awake(msg, PHASE_FORWARD)
        cur = self.cur
        if cur is None:
            return None
        member = self.index in cur.active
        seen: Set[int] = set()
        ranks: Dict[int, int] = {}
        for msg in proposals:
            if msg.sender in seen or msg.sender not in cur.active:
                continue
            seen.add(msg.sender)
            if (
                msg.view != cur.view
                or msg.block.view != cur.view
                or msg.block.proposer != msg.sender
                or msg.precommit.node != msg.sender
                or msg.precommit.view != cur.view
            ):
                continue
            h = self.policy.proposal_digest(msg.block, msg.precommit)
            cur.blocks[h] = msg.block
            # pre-commit intents count from any well-formed proposal;
            # membership liveness must not hinge on share validity
            if msg.precommit.intent:
                cur.precom_true.add(msg.sender)
            if not member:
                continue
            if not self.policy.deal_shape_ok(msg.deal, len(cur.active), cur.t, cur.active):
                continue
            if not self.policy.vrf_ok(msg.sender, cur.view, msg.vrf):
                continue
            if not self.policy.own_share_ok(msg.deal, msg.sender, self.index):
                continue
            cur.proposals[msg.sender] = msg
            cur.digests[msg.sender] = h
            ranks[msg.sender] = msg.vrf.rho
        if not member or not ranks:
            return None
        leader = select_leader(ranks)
        cur.leader = leader
        cur.leader_digest = cur.digests[leader]
        enc, dec = self.policy.decrypt_for_forward(
            self.index, leader, cur.proposals[leader].deal
        )
        return ShareForwardMsg(
            view=cur.view,
            leader=leader,
            enc_share=enc,
            dec_share=dec,
            awake_list=tuple(sorted(cur.awake_heard)),
            next_round_commit=tuple(sorted(cur.precom_true)),
            sender=self.index,
        )

    def phase3_vote(self, forwards: Iterable[ShareForwardMsg]):
        """Tally membership lists, open the leader secret, emit my VOTE."""
        cur = self.cur
        if cur is None:
            return None
        half = len(cur.active) / 2
        awake_lists: Dict[tuple, int] = {}
        precom_lists: Dict[tuple, int] = {}
        pool: Dict[int, DecryptedShare] = {}
        leader_deal = cur.proposals[cur.leader].deal if cur.leader is not None else None
        seen: Set[int] = set()
        for msg in forwards:
            if msg.sender in seen or msg.sender not in cur.active or msg.view != cur.view:
                continue
            seen.add(msg.sender)
            # most forwards carry identical lists: count per distinct tuple
            awake_lists[msg.awake_list] = awake_lists.get(msg.awake_list, 0) + 1
            precom_lists[msg.next_round_commit] = (
                precom_lists.get(msg.next_round_commit, 0) + 1
            )
            if (
                leader_deal is None
                or msg.leader != cur.leader
                or msg.dec_share.index != msg.sender
            ):
                continue
            if not self.policy.share_matches(leader_deal, cur.leader, msg.sender, msg.enc_share):
                continue
            if not self.policy.decryption_ok(leader_deal, cur.leader, msg.sender,
                                             msg.enc_share, msg.dec_share):
                continue
            pool[msg.sender] = msg.dec_share
        awake_counts: Dict[int, int] = {}
        for tup, mult in awake_lists.items():
            for k in tup:
                awake_counts[k] = awake_counts.get(k, 0) + mult
        precom_counts: Dict[int, int] = {}
        for tup, mult in precom_lists.items():
            for k in tup:
                precom_counts[k] = precom_counts.get(k, 0) + mult
        cur.tally_joiners = frozenset(
            k for k, c in awake_counts.items() if c > half and k not in cur.active
        )
        cur.tally_precom = frozenset(k for k, c in precom_counts.items() if c > half)
        if self.index not in cur.active:
            return None
        vote = False
        if leader_deal is not None:
            if len(pool) >= cur.t:
                vote = self.policy.leader_open_matches(
                    leader_deal, cur.leader, pool, cur.t, cur.leader_digest
                )
            else:
                cur.reconstruction_failed = True
        # a true vote also asserts the leader's block extends my chain
        if vote and cur.blocks[cur.leader_digest].parent_hash != self.tip():
            vote = False
        cur.my_vote = vote
        secret = self.group.hash_to_scalar(VOTE_SECRET_TAG, vote_digest(vote))
        vote_deal = self.policy.make_deal(self.index, cur.view, "vote", secret,
                                          cur.active, cur.t)
        return VoteMsg(view=cur.view, vote=vote, vote_deal=vote_deal, sender=self.index)

    def phase4_confirm_and_decide(self, votes: Iterable[VoteMsg]):
        """Count votes, emit CONFIRM on quorum; the decide half completes
        in `finalize_view` once confirms arrive a tick later."""
        cur = self.cur
        if cur is None:
            return None
        for msg in votes:
            if msg.sender in cur.my_votes_seen or msg.sender not in cur.active:
                continue
            if msg.view != cur.view:
                continue
            if not self.policy.deal_shape_ok(msg.vote_deal, len(cur.active), cur.t,
                                             cur.active):
                continue
            cur.my_votes_seen[msg.sender] = msg.vote
            cur.vote_deals[msg.sender] = msg.vote_deal
        trues = sum(1 for b in cur.my_votes_seen.values() if b)
        falses = len(cur.my_votes_seen) - trues
        cur.inconsistent_votes = trues > 0 and falses > 0
        if cur.inconsistent_votes or cur.reconstruction_failed:
            self.armed_view = cur.view
        if (
            self.index in cur.active
            and cur.my_vote is True
            and cur.leader_digest is not None
            and trues >= cur.t
        ):
            return ConfirmMsg(view=cur.view, block_hash=cur.leader_digest,
                              sender=self.index)
        return None

    def finalize_view(self, confirms: Iterable[ConfirmMsg]) -> Optional[ViewOutcome]:
        """Process confirms at 4(v+1); decide, and fix A(v+1)."""
        cur = self.cur
        if cur is None:
            return None
        counts: Dict[bytes, int] = {}
        for msg in confirms:
            if msg.sender not in cur.active or msg.view != cur.view:
                continue
            previous = cur.confirm_by_sender.get(msg.sender)
            if previous is not None:
                if previous != msg.block_hash:
                    self.evidence.append(
                        Evidence(cur.view, msg.sender, "confirm-equivocation", True)
                    )
                continue
            cur.confirm_by_sender[msg.sender] = msg.block_hash
            counts[msg.block_hash] = counts.get(msg.block_hash, 0) + 1
        decided_digest = None
        for digest, count in counts.items():
            if count >= cur.t:
                decided_digest = digest
                break
        behind = False
        if decided_digest is not None:
            status = "decided"
            block = cur.blocks.get(decided_digest)
            if block is not None and block.parent_hash == self.tip():
                self._apply_block(block)
            else:
                behind = True
                self.need_sync = True
        elif not cur.active:
            status = "stalled"
        else:
            status = "aborted"
        joiners = cur.tally_joiners if cur.tally_joiners is not None else frozenset()
        if cur.tally_precom is None:
            # slept through the forward phase: no basis for A(v+1)
            self.next_active = None
            self.need_sync = True
        elif status == "decided":
            self.next_active = cur.tally_precom | joiners
        else:
            base = cur.tally_precom if cur.tally_precom else cur.active
            self.next_active = base | joiners
        self.next_active_for = cur.view + 1
        return ViewOutcome(
            view=cur.view,
            status=status,
            digest=decided_digest,
            behind=behind,
            inconsistent_votes=cur.inconsistent_votes,
            reconstruction_failed=cur.reconstruction_failed,
        )

    # -- error recovery --

    def error_recovery_send(self) -> Optional[RecoverMsg]:
        """Rebroadcast my stored vote-deal shares for the armed view."""
        if self.armed_view is None:
            return None
        vs = self.prev if self.prev and self.prev.view == self.armed_view else self.cur
        self.armed_view = None
        if vs is None or self.index not in vs.active:
            return None
        shares = {
            voter: self.policy.recovery_share(self.index, voter, deal)
            for voter, deal in vs.vote_deals.items()
        }
        if not shares:
            return None
        return RecoverMsg(recover_view=vs.view, shares=shares, sender=self.index)

    def error_recovery_process(self, msgs: Iterable[RecoverMsg]) -> List[Evidence]:
        """Open rebroadcast vote deals; flag voters whose opened vote
        contradicts the vote they broadcast."""
        vs = self.prev
        if vs is None:
            return []
        pools: Dict[int, Dict[int, DecryptedShare]] = {}
        touched: Set[int] = set()
        vote_deals = vs.vote_deals
        threshold = vs.t
        filled = 0
        for msg in msgs:
            if msg.recover_view != vs.view or msg.sender not in vs.active:
                continue
            if filled == len(vote_deals) and len(touched) == len(vote_deals):
                break  # every pool already holds t valid shares
            sender = msg.sender
            for voter, dec in msg.shares.items():
                deal = vote_deals.get(voter)
                if deal is None or dec.index != sender:
                    continue
                touched.add(voter)
                pool = pools.get(voter)
                if pool is None:
                    pool = pools[voter] = {}
                if len(pool) >= threshold:
                    continue  # reconstruction only ever uses t shares
                if not self.policy.recovery_share_ok(deal, voter, sender, dec):
                    continue
                pool[sender] = dec
                if len(pool) == threshold:
                    filled += 1
        found: List[Evidence] = []
        for voter in sorted(touched):
            deal = vs.vote_deals[voter]
            pool = pools.get(voter, {})
            broadcast = vs.my_votes_seen.get(voter)
            if len(pool) < vs.t or broadcast is None:
                found.append(Evidence(vs.view, voter, "unverifiable", False))
                continue
            opened = self.policy.vote_open(deal, voter, pool, vs.t)
            if opened is None or opened != broadcast:
                found.append(Evidence(vs.view, voter, "vote-mismatch", True))
        self.evidence.extend(found)
        return found

    # -- resynchronization --

    def can_supply_sync(self) -> bool:
        return self.next_active is not None and not self.need_sync

    def sync_adopt(self, src: "Node") -> None:
        self.log = list(src.log)
        self.chain_digests = set(src.chain_digests)
        self.pending = list(src.pending)
        self.pending_set = set(src.pending_set)
        self.decided_txs = set(src.decided_txs)
        self.next_active = src.next_active
        self.next_active_for = src.next_active_for
        self.cur = None
        self.prev = None
        self.armed_view = None
        self.need_sync = False
