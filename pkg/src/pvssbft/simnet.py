"""Discrete-time network simulator for the consensus protocol.

Time advances in one-second ticks; one tick is also the delivery bound:
anything broadcast at tick T reaches every node that is awake at T+1.
A node asleep at the delivery tick misses the message for good.  View v
runs from tick 4v (proposals) through 4v+3 (confirms); the boundary tick
4(v+1) finalizes v and starts v+1.

Churn models decide who is awake at each tick:

  Sinusoidal(mean, amplitude, period)  awake fraction follows a sine of
      the tick; the awake set is always the lowest-index prefix, so
      membership churns smoothly ("diurnal" participation).
  Bernoulli(p)   each node is asleep with probability p at each tick,
      independently across nodes and ticks.
  FlipEachSecond(p)  each node flips its previous state with
      probability p each tick, starting from everyone awake.

A schedule is a list of stages, each a model with a duration; the last
stage extends to the end of the run.  Nodes read the same schedule to
declare next-view participation intent, so intents are accurate.

Crypto levels: "full" executes every group operation; "fast" swaps
deals and shares for in-memory stand-ins that preserve accept/reject
decisions exactly (construction-valid artifacts verify, tampered ones
fail precisely where the real check fails).  Tests pin the equivalence
by running identical scenarios at both levels and comparing every
per-view record.

Byzantine nodes are the highest indices.  Every adversarial strategy
follows the protocol except for its named deviation, so runs isolate
one attack at a time.  Safety assertions raise `SafetyViolation`
immediately: at most one decided digest per view, prefix-consistent
honest logs, one digest behind all honest true votes, at most one
confirm quorum, agreement on the active set, and (when the scenario is
tagged `safety_valid`) an honest majority among awake nodes each tick.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .group import Group, group_setup
from .metrics import (
    ForkEvent,
    ForkMonitor,
    MetricsRecord,
    NodeRecord,
    TxRecord,
)
from .protocol import (
    BLOCK_SECRET_TAG,
    VOTE_SECRET_TAG,
    CryptoPolicy,
    Evidence,
    Node,
    ViewOutcome,
)
from .pvss import keygen
from .vrf import VrfOutput, vrf_base, vrf_rank
from .wire import (
    AwakeMsg,
    Block,
    ConfirmMsg,
    ProposeMsg,
    RecoverMsg,
    ShareForwardMsg,
    VoteMsg,
    vote_digest,
)

__all__ = [
    "Sinusoidal",
    "Bernoulli",
    "FlipEachSecond",
    "Stage",
    "ChurnSchedule",
    "AllAwake",
    "ScenarioConfig",
    "ConfigError",
    "SafetyViolation",
    "FastPolicy",
    "STRATEGIES",
    "Simulation",
    "SimResult",
    "run_scenario",
]


class ConfigError(ValueError):
    pass


class SafetyViolation(AssertionError):
    """A consensus safety property failed; the run aborts loudly."""


# ---------------------------------------------------------------------------
# churn


@dataclass(frozen=True)
class Sinusoidal:
    mean: float = 0.5
    amplitude: float = 0.2
    period: float = 120.0


@dataclass(frozen=True)
class Bernoulli:
    p: float


@dataclass(frozen=True)
class FlipEachSecond:
    p: float


@dataclass(frozen=True)
class Stage:
    duration: int  # ticks
    model: object


class AllAwake:
    """Churn-free schedule: every node is awake at every tick."""

    def __init__(self, n: int):
        self._all = frozenset(range(1, n + 1))

    def awake_set(self, tick: int) -> FrozenSet[int]:
        return self._all


class ChurnSchedule:
    """Evaluates a staged churn plan tick by tick.

    Sets are materialized lazily in tick order and memoized, so random
    models stay deterministic under out-of-order queries (intent checks
    look a few ticks ahead).
    """

    def __init__(self, stages: Sequence[Stage], n: int, rng: random.Random):
        if not stages:
            raise ConfigError("churn schedule needs at least one stage")
        self.stages = list(stages)
        self.n = n
        self.rng = rng
        self._indices = list(range(1, n + 1))
        self._memo: List[FrozenSet[int]] = []

    def _model_at(self, tick: int):
        offset = tick
        for stage in self.stages:
            if offset < stage.duration:
                return stage.model
            offset -= stage.duration
        return self.stages[-1].model  # last stage extends

    def _next_set(self, tick: int) -> FrozenSet[int]:
        model = self._model_at(tick)
        if isinstance(model, Sinusoidal):
            frac = model.mean + model.amplitude * math.sin(
                2.0 * math.pi * tick / model.period
            )
            k = int(math.floor(frac * self.n + 0.5))
            k = max(0, min(self.n, k))
            return frozenset(self._indices[:k])
        if isinstance(model, Bernoulli):
            return frozenset(
                i for i in self._indices if self.rng.random() >= model.p
            )
        if isinstance(model, FlipEachSecond):
            prev = self._memo[tick - 1] if tick > 0 else frozenset(self._indices)
            flipped = set()
            for i in self._indices:
                state = i in prev
                if self.rng.random() < model.p:
                    state = not state
                if state:
                    flipped.add(i)
            return frozenset(flipped)
        raise ConfigError(f"unknown churn model: {model!r}")

    def awake_set(self, tick: int) -> FrozenSet[int]:
        while len(self._memo) <= tick:
            self._memo.append(self._next_set(len(self._memo)))
        return self._memo[tick]


# ---------------------------------------------------------------------------
# scenario configuration


VARIANTS = ("pvss-bft", "baseline-bft", "longest-chain")
CRYPTO_LEVELS = ("fast", "full")


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    n: int = 4
    views: int = 10
    seed: int = 0
    profile: str = "test64"
    byzantine: int = 0
    strategy: str = "honest"
    churn: Optional[Sequence[Stage]] = None
    variant: str = "pvss-bft"
    crypto_level: str = "fast"
    safety_valid: bool = True
    txs_per_view: int = 2
    collect_node_records: bool = False

    def validate(self) -> None:
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.views < 1:
            raise ConfigError("views must be positive")
        if not 0 <= self.byzantine < self.n:
            raise ConfigError("byzantine count must be in [0, n)")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant: {self.variant}")
        if self.crypto_level not in CRYPTO_LEVELS:
            raise ConfigError(f"unknown crypto level: {self.crypto_level}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy: {self.strategy}")
        if not 0 < self.txs_per_view < 1000:
            raise ConfigError("txs_per_view must be in [1, 999]")


# ---------------------------------------------------------------------------
# fast crypto level

_uid_counter = itertools.count(1)


class LazyDeal:
    """Stand-in for a share dealing at the fast crypto level.

    Carries only what the accept/reject decisions depend on: the secret
    (scalar), the recipient set and threshold, and the set of recipients
    whose encrypted share an adversary corrupted.  Construction-valid
    shares verify; anything tampered fails exactly as it would under
    full verification.
    """

    __slots__ = ("uid", "dealer", "secret", "recipients", "n", "t", "bad_shares")

    def __init__(self, dealer: int, secret: int, recipients: FrozenSet[int],
                 t: int, bad_shares: FrozenSet[int] = frozenset()):
        self.uid = next(_uid_counter)
        self.dealer = dealer
        self.secret = secret
        self.recipients = recipients
        self.n = len(recipients)
        self.t = t
        self.bad_shares = bad_shares


class LazyShare:
    __slots__ = ("uid", "index")

    def __init__(self, uid: int, index: int):
        self.uid = uid
        self.index = index


class LazyDecShare:
    __slots__ = ("uid", "index")

    def __init__(self, uid: int, index: int):
        self.uid = uid
        self.index = index


class FastPolicy(CryptoPolicy):
    """Crypto policy with constant-time stand-ins for deals and shares.

    Group work that shapes protocol behaviour stays real: VRF values are
    genuine exponentiations so leader rotation matches the full level
    bit for bit.  VRF proofs are elided; validity checks recognize the
    policy's own outputs by identity and fall back to full verification
    for anything else.
    """

    def __init__(self, group: Group, master_seed: int = 0):
        super().__init__(group, master_seed)
        self._vrf_memo: Dict[Tuple[int, int], VrfOutput] = {}
        self._vrf_base_memo: Dict[int, int] = {}
        self._digest_memo: Dict[Tuple[int, int], Tuple[object, object, bytes]] = {}
        self._flag_by_secret = {
            group.hash_to_scalar(VOTE_SECRET_TAG, vote_digest(flag)): flag
            for flag in (True, False)
        }

    # -- construction --

    def make_deal(self, dealer: int, view: int, purpose: str, secret: int,
                  recipients: FrozenSet[int], t: int):
        return LazyDeal(dealer, secret, frozenset(recipients), t)

    def make_vrf(self, node: int, view: int) -> VrfOutput:
        out = self._vrf_memo.get((node, view))
        if out is None:
            base = self._vrf_base_memo.get(view)
            if base is None:
                base = vrf_base(self.group, view)
                self._vrf_base_memo[view] = base
            value = self.group.exp(base, self.keypairs[node].sk)
            out = VrfOutput(value=value, rho=vrf_rank(self.group, value), proof=None)
            self._vrf_memo[(node, view)] = out
        return out

    def own_enc_share(self, deal, dealer: int, index: int):
        if isinstance(deal, LazyDeal):
            return LazyShare(deal.uid, index)
        return super().own_enc_share(deal, dealer, index)

    def decrypt_for_forward(self, node: int, dealer: int, deal):
        if isinstance(deal, LazyDeal):
            return LazyShare(deal.uid, node), LazyDecShare(deal.uid, node)
        return super().decrypt_for_forward(node, dealer, deal)

    def recovery_share(self, holder: int, voter: int, deal):
        if isinstance(deal, LazyDeal):
            return LazyDecShare(deal.uid, holder)
        return super().recovery_share(holder, voter, deal)

    def forge_shares(self, deal, victims):
        if isinstance(deal, LazyDeal):
            return LazyDeal(deal.dealer, deal.secret, deal.recipients, deal.t,
                            bad_shares=deal.bad_shares | frozenset(victims))
        return super().forge_shares(deal, victims)

    # -- verification --

    def deal_shape_ok(self, deal, n: int, t: int, recipients: FrozenSet[int]) -> bool:
        if isinstance(deal, LazyDeal):
            return deal.n == n and deal.t == t and deal.recipients == recipients
        return super().deal_shape_ok(deal, n, t, recipients)

    def vrf_ok(self, sender: int, view: int, vrf) -> bool:
        if self._vrf_memo.get((sender, view)) is vrf:
            return True
        if getattr(vrf, "proof", None) is None:
            return False
        return super().vrf_ok(sender, view, vrf)

    def own_share_ok(self, deal, dealer: int, index: int) -> bool:
        if isinstance(deal, LazyDeal):
            return index in deal.recipients and index not in deal.bad_shares
        return super().own_share_ok(deal, dealer, index)

    def share_matches(self, deal, dealer: int, index: int, enc_share) -> bool:
        if isinstance(deal, LazyDeal):
            return (
                isinstance(enc_share, LazyShare)
                and enc_share.uid == deal.uid
                and enc_share.index == index
            )
        return super().share_matches(deal, dealer, index, enc_share)

    def decryption_ok(self, deal, dealer: int, forwarder: int, enc_share, dec) -> bool:
        if isinstance(deal, LazyDeal):
            return (
                isinstance(dec, LazyDecShare)
                and dec.uid == deal.uid
                and dec.index == forwarder
                and forwarder not in deal.bad_shares
            )
        return super().decryption_ok(deal, dealer, forwarder, enc_share, dec)

    def leader_open_matches(self, deal, dealer: int, shares, t: int,
                            digest: bytes) -> bool:
        if isinstance(deal, LazyDeal):
            return deal.secret == self.group.hash_to_scalar(BLOCK_SECRET_TAG, digest)
        return super().leader_open_matches(deal, dealer, shares, t, digest)

    def recovery_share_ok(self, deal, voter: int, holder: int, dec) -> bool:
        if isinstance(deal, LazyDeal):
            return (
                isinstance(dec, LazyDecShare)
                and dec.uid == deal.uid
                and dec.index == holder
            )
        return super().recovery_share_ok(deal, voter, holder, dec)

    def vote_open(self, deal, voter: int, shares, t: int) -> Optional[bool]:
        if isinstance(deal, LazyDeal):
            return self._flag_by_secret.get(deal.secret)
        return super().vote_open(deal, voter, shares, t)

    # -- caching --

    def proposal_digest(self, block, precommit) -> bytes:
        key = (id(block), id(precommit))
        hit = self._digest_memo.get(key)
        if hit is not None:
            return hit[2]
        digest = super().proposal_digest(block, precommit)
        # hold refs so ids stay unique for the cache's lifetime
        self._digest_memo[key] = (block, precommit, digest)
        return digest

    def reset_view_cache(self) -> None:
        self._digest_memo.clear()


# ---------------------------------------------------------------------------
# adversary strategies


class Strategy:
    """Message-level adversary hooks; the default plays honestly.

    Subclasses override single phases for byzantine senders and return
    a list of (message, excluded_receivers) pairs per sender.
    """

    name = "honest"

    def __init__(self, sim: "Simulation"):
        self.sim = sim

    def propose(self, node: Node, view: int):
        msg = node.phase1_propose(view)
        return [(msg, None)] if msg else []

    def forward(self, node: Node, proposals, awakes):
        msg = node.phase2_process(proposals, awakes)
        return [(msg, None)] if msg else []

    def vote(self, node: Node, forwards):
        msg = node.phase3_vote(forwards)
        return [(msg, None)] if msg else []

    def confirm(self, node: Node, votes):
        msg = node.phase4_confirm_and_decide(votes)
        return [(msg, None)] if msg else []

    # helper: honest members of the sender's current active set
    def _honest_victims(self, node: Node) -> FrozenSet[int]:
        honest = sorted(i for i in node.cur.active if i not in self.sim.byz)
        return frozenset(honest[: (len(honest) + 1) // 2])


class EquivocatingLeader(Strategy):
    """Send two different blocks, with matching deals, to two halves of
    the network under one VRF, hoping both sides decide."""

    name = "equivocating-leader"

    def propose(self, node: Node, view: int):
        if node.index not in self.sim.byz:
            return super().propose(node, view)
        msg_a = node.phase1_propose(view)
        if not isinstance(msg_a, ProposeMsg):
            return [(msg_a, None)] if msg_a else []
        block_b = Block(
            parent_hash=msg_a.block.parent_hash,
            view=view,
            payload=msg_a.block.payload + (999_000_000 + view,),
            proposer=node.index,
        )
        digest_b = node.policy.proposal_digest(block_b, msg_a.precommit)
        secret_b = node.group.hash_to_scalar(BLOCK_SECRET_TAG, digest_b)
        deal_b = node.policy.make_deal(
            node.index, view, "block-b", secret_b, node.cur.active, node.cur.t
        )
        msg_b = ProposeMsg(view=view, block=block_b, deal=deal_b, vrf=msg_a.vrf,
                           precommit=msg_a.precommit, sender=node.index)
        evens = frozenset(i for i in self.sim.indices if i % 2 == 0)
        odds = frozenset(i for i in self.sim.indices if i % 2 == 1)
        return [(msg_a, evens), (msg_b, odds)]


class ShareForger(Strategy):
    """Corrupt the encrypted shares aimed at half the honest nodes while
    keeping the commitments, so victims reject the proposal."""

    name = "share-forger"

    def propose(self, node: Node, view: int):
        if node.index not in self.sim.byz:
            return super().propose(node, view)
        msg = node.phase1_propose(view)
        if not isinstance(msg, ProposeMsg):
            return [(msg, None)] if msg else []
        victims = self._honest_victims(node)
        forged = node.policy.forge_shares(msg.deal, sorted(victims))
        return [(ProposeMsg(view=view, block=msg.block, deal=forged, vrf=msg.vrf,
                            precommit=msg.precommit, sender=node.index), None)]


class CommitmentForger(Strategy):
    """Deal a perfectly valid sharing of the wrong secret, so every
    reconstruction opens to a value that contradicts the block digest."""

    name = "commitment-forger"

    def propose(self, node: Node, view: int):
        if node.index not in self.sim.byz:
            return super().propose(node, view)
        msg = node.phase1_propose(view)
        if not isinstance(msg, ProposeMsg):
            return [(msg, None)] if msg else []
        digest = node.policy.proposal_digest(msg.block, msg.precommit)
        wrong = (node.group.hash_to_scalar(BLOCK_SECRET_TAG, digest) + 1) % node.group.q
        deal = node.policy.make_deal(
            node.index, view, "block-wrong", wrong, node.cur.active, node.cur.t
        )
        return [(ProposeMsg(view=view, block=msg.block, deal=deal, vrf=msg.vrf,
                            precommit=msg.precommit, sender=node.index), None)]


class VoteEquivocator(Strategy):
    """Broadcast vote=true while the escrowed vote share encodes false;
    the lie surfaces only when error recovery opens the escrow."""

    name = "vote-equivocator"

    def vote(self, node: Node, forwards):
        msg = node.phase3_vote(forwards)
        if node.index not in self.sim.byz or msg is None:
            return [(msg, None)] if msg else []
        false_secret = node.group.hash_to_scalar(VOTE_SECRET_TAG, vote_digest(False))
        lie = node.policy.make_deal(
            node.index, node.cur.view, "vote-lie", false_secret,
            node.cur.active, node.cur.t,
        )
        return [(VoteMsg(view=node.cur.view, vote=True, vote_deal=lie,
                         sender=node.index), None)]


class SelectiveBroadcaster(Strategy):
    """Propose honestly but withhold the proposal from half the honest
    nodes, splitting the network's view of the candidate set."""

    name = "selective-broadcaster"

    def propose(self, node: Node, view: int):
        if node.index not in self.sim.byz:
            return super().propose(node, view)
        msg = node.phase1_propose(view)
        if not isinstance(msg, ProposeMsg):
            return [(msg, None)] if msg else []
        return [(msg, self._honest_victims(node))]


STRATEGIES = {
    cls.name: cls
    for cls in (
        Strategy,
        EquivocatingLeader,
        ShareForger,
        CommitmentForger,
        VoteEquivocator,
        SelectiveBroadcaster,
    )
}


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimResult:
    config: ScenarioConfig
    records: List[MetricsRecord]
    node_records: List[NodeRecord]
    tx_records: List[TxRecord]
    fork_events: List[ForkEvent]
    evidence: List[Evidence]
    decided: int
    aborted: int
    stalled: int
    discarded_total: int
    final_logs: Dict[int, Tuple[bytes, ...]]

    @property
    def fork_count(self) -> int:
        return len(self.fork_events)

    @property
    def decision_rate(self) -> float:
        return self.decided / len(self.records) if self.records else 0.0

    def summary(self) -> dict:
        latencies = [r.latency_ticks for r in self.records
                     if r.latency_ticks is not None]
        return {
            "scenario": self.config.name,
            "seed": self.config.seed,
            "variant": self.config.variant,
            "views": len(self.records),
            "decided": self.decided,
            "aborted": self.aborted,
            "stalled": self.stalled,
            "decision_rate": self.decision_rate,
            "forks": self.fork_count,
            "discarded": self.discarded_total,
            "mean_latency_ticks": (
                sum(latencies) / len(latencies) if latencies else None
            ),
            "faulty_evidence": sum(1 for e in self.evidence if e.faulty),
            "max_height": max(
                (len(log) for log in self.final_logs.values()), default=0
            ),
        }


class _ViewStash:
    """Per-view observations the assertions and metrics need."""

    __slots__ = ("awake", "byz_awake", "awake_ids", "actives", "t_values",
                 "true_digests", "confirm_counts", "candidates", "outcomes",
                 "began")

    def __init__(self) -> None:
        self.awake = 0
        self.byz_awake = 0
        self.awake_ids: FrozenSet[int] = frozenset()
        self.actives: Set[FrozenSet[int]] = set()
        self.t_values: Set[int] = set()
        self.true_digests: Set[bytes] = set()
        self.confirm_counts: Dict[bytes, int] = {}
        self.candidates: Set[bytes] = set()
        self.outcomes: Dict[int, ViewOutcome] = {}
        self.began: Set[int] = set()


_BUCKETS = {
    ProposeMsg: "propose",
    AwakeMsg: "awake",
    ShareForwardMsg: "forward",
    VoteMsg: "vote",
    ConfirmMsg: "confirm",
    RecoverMsg: "recover",
}


class Simulation:
    def __init__(self, config: ScenarioConfig):
        config.validate()
        if config.variant != "pvss-bft":
            raise ConfigError("Simulation runs the pvss-bft variant only")
        self.config = config
        self.group = group_setup(config.profile)
        policy_cls = FastPolicy if config.crypto_level == "fast" else CryptoPolicy
        self.policy = policy_cls(self.group, master_seed=config.seed)
        self.indices = list(range(1, config.n + 1))
        self.byz = frozenset(self.indices[config.n - config.byzantine:])
        key_rng = random.Random(f"{config.seed}:keys")
        for i in self.indices:
            self.policy.register(i, keygen(self.group, key_rng))
        if config.churn is None:
            self.churn = AllAwake(config.n)
        else:
            self.churn = ChurnSchedule(
                config.churn, config.n, random.Random(f"{config.seed}:churn")
            )
        genesis = self.churn.awake_set(0)
        self.nodes: Dict[int, Node] = {
            i: Node(
                i,
                self.policy.keypairs[i],
                self.policy,
                genesis,
                planned_intent=self._intent_fn(i),
            )
            for i in self.indices
        }
        self.strategy: Strategy = STRATEGIES[config.strategy](self)
        self.monitor = ForkMonitor()
        self.stash: Dict[int, _ViewStash] = {}
        self.records: List[MetricsRecord] = []
        self.node_records: List[NodeRecord] = []
        self.tx_submit: Dict[int, int] = {}
        self.tx_decide: Dict[int, int] = {}
        self.decided = 0
        self.aborted = 0
        self.stalled = 0
        self.discarded_total = 0

    def _intent_fn(self, index: int):
        def intent(view: int) -> bool:
            return index in self.churn.awake_set(4 * view)

        return intent

    def _honest(self, indices) -> List[int]:
        return [i for i in indices if i not in self.byz]

    def _honest_logs(self) -> List[List[bytes]]:
        return [[d for d, _ in self.nodes[i].log] for i in self._honest(self.indices)]

    # -- per-tick helpers --

    def _route(self, outbox, awake: FrozenSet[int], awake_sorted: List[int]):
        """Sort last tick's sends into per-receiver inboxes by type."""
        common: Dict[str, list] = {}
        extras: Dict[int, Dict[str, list]] = {}
        for msg, excluded in outbox:
            bucket = _BUCKETS[type(msg)]
            if excluded is None:
                common.setdefault(bucket, []).append(msg)
            else:
                for r in awake_sorted:
                    if r not in excluded:
                        extras.setdefault(r, {}).setdefault(bucket, []).append(msg)
        return common, extras

    @staticmethod
    def _inbox(common, extras, receiver: int, bucket: str) -> list:
        base = common.get(bucket)
        extra = extras.get(receiver, {}).get(bucket)
        if extra is None:
            return base if base is not None else []
        if base is None:
            return extra
        return base + extra

    def _check_awake_majority(self, tick: int, awake: FrozenSet[int]) -> None:
        if not self.config.safety_valid or not awake:
            return
        byz_awake = len(awake & self.byz)
        if 2 * byz_awake >= len(awake):
            raise SafetyViolation(
                f"tick {tick}: byzantine majority among awake "
                f"({byz_awake} of {len(awake)})"
            )

    def _sync_pass(self, view: int, awake_sorted: List[int]) -> None:
        source = None
        for j in awake_sorted:
            node = self.nodes[j]
            if node.can_supply_sync() and node.next_active_for == view:
                source = node
                break
        if source is None:
            return
        for i in awake_sorted:
            node = self.nodes[i]
            if node is source:
                continue
            if node.need_sync or node.next_active is None or node.next_active_for != view:
                node.sync_adopt(source)

    def _assert_view_safety(self, view: int, stash: _ViewStash) -> None:
        decided = {o.digest for o in stash.outcomes.values() if o.status == "decided"}
        if len(decided) > 1:
            raise SafetyViolation(f"view {view}: conflicting decisions {decided}")
        if len(stash.true_digests) > 1:
            raise SafetyViolation(f"view {view}: true votes span two digests")
        if stash.t_values:
            t_min = min(stash.t_values)
            quorums = [d for d, c in stash.confirm_counts.items() if c >= t_min]
            if len(quorums) > 1:
                raise SafetyViolation(f"view {view}: two confirm quorums")
        if len(stash.actives) > 1:
            raise SafetyViolation(f"view {view}: active-set disagreement")
        new_forks = self.monitor.observe(self._honest_logs())
        if new_forks:
            raise SafetyViolation(f"view {view}: honest logs diverged")

    def _record_view(self, view: int, stash: _ViewStash) -> None:
        decided = {o.digest for o in stash.outcomes.values() if o.status == "decided"}
        outcome = "decided" if decided else "aborted"
        latency = 4 if decided else None
        discarded = len(stash.candidates - decided)
        self.discarded_total += discarded
        if decided:
            self.decided += 1
        else:
            self.aborted += 1
            if not stash.began:
                self.stalled += 1
        participants = [self.nodes[i] for i in sorted(stash.outcomes)]
        heights = [n.height() for n in participants]
        if not heights:
            heights = [self.nodes[i].height() for i in self._honest(self.indices)]
        self.records.append(
            MetricsRecord(
                scenario=self.config.name,
                seed=self.config.seed,
                view=view,
                variant=self.config.variant,
                outcome=outcome,
                latency_ticks=latency,
                discarded=discarded,
                forks_cum=self.monitor.fork_count,
                chain_len_min=min(heights),
                chain_len_max=max(heights),
                awake=stash.awake,
                byz_awake=stash.byz_awake,
            )
        )
        if self.config.collect_node_records:
            active = next(iter(stash.actives)) if stash.actives else frozenset()
            for i in self.indices:
                out = stash.outcomes.get(i)
                self.node_records.append(
                    NodeRecord(
                        scenario=self.config.name,
                        seed=self.config.seed,
                        view=view,
                        node=i,
                        awake=i in stash.awake_ids,
                        member=i in active,
                        byzantine=i in self.byz,
                        decided=bool(out and out.status == "decided"),
                        chain_len=self.nodes[i].height(),
                    )
                )

    # -- main loop --

    def run(self) -> SimResult:
        cfg = self.config
        total_ticks = 4 * cfg.views
        outbox: List[Tuple[object, Optional[FrozenSet[int]]]] = []
        prev_awake: FrozenSet[int] = frozenset()
        for tick in range(total_ticks + 1):
            awake = self.churn.awake_set(tick)
            self._check_awake_majority(tick, awake)
            awake_sorted = sorted(awake)
            common, extras = self._route(outbox, awake, awake_sorted)
            outbox = []
            view, phase = divmod(tick, 4)

            if phase == 0:
                self.policy.reset_view_cache()
                if view >= 1:
                    self._boundary_finalize(view - 1, awake_sorted, common, extras,
                                            outbox, tick)
                if view < cfg.views:
                    self._boundary_begin(view, awake, awake_sorted, outbox, tick)
            elif phase == 1:
                for i in awake_sorted:
                    recovers = self._inbox(common, extras, i, "recover")
                    if recovers:
                        self.nodes[i].error_recovery_process(recovers)
                for i in awake_sorted:
                    node = self.nodes[i]
                    if node.cur is None or node.cur.view != view:
                        continue
                    sends = self.strategy.forward(
                        node,
                        self._inbox(common, extras, i, "propose"),
                        self._inbox(common, extras, i, "awake"),
                    )
                    outbox.extend(sends)
            elif phase == 2:
                stash = self.stash[view]
                for i in awake_sorted:
                    node = self.nodes[i]
                    if node.cur is None or node.cur.view != view:
                        continue
                    for msg in self._inbox(common, extras, i, "awake"):
                        node.handle_awake(msg, 3)
                    sends = self.strategy.vote(
                        node, self._inbox(common, extras, i, "forward")
                    )
                    outbox.extend(sends)
                    if i not in self.byz:
                        for msg, _ in sends:
                            if isinstance(msg, VoteMsg) and msg.vote:
                                stash.true_digests.add(node.cur.leader_digest)
            else:
                stash = self.stash[view]
                for i in awake_sorted:
                    node = self.nodes[i]
                    if node.cur is None or node.cur.view != view:
                        continue
                    for msg in self._inbox(common, extras, i, "awake"):
                        node.handle_awake(msg, 4)
                    sends = self.strategy.confirm(
                        node, self._inbox(common, extras, i, "vote")
                    )
                    outbox.extend(sends)
                    for msg, _ in sends:
                        if isinstance(msg, ConfirmMsg):
                            stash.confirm_counts[msg.block_hash] = (
                                stash.confirm_counts.get(msg.block_hash, 0) + 1
                            )
                            if i not in self.byz:
                                stash.candidates.add(msg.block_hash)

            if phase != 0:
                for i in sorted(awake - prev_awake):
                    node = self.nodes[i]
                    if not (node.cur is not None and node.cur.view == view
                            and i in node.cur.active):
                        outbox.append(
                            (AwakeMsg(node=i, view=view, sender=i), None)
                        )
            prev_awake = awake

        return self._finish()

    def _boundary_finalize(self, ended_view: int, awake_sorted, common, extras,
                           outbox, tick: int) -> None:
        stash = self.stash[ended_view]
        for i in awake_sorted:
            node = self.nodes[i]
            if node.cur is None or node.cur.view != ended_view:
                continue
            outcome = node.finalize_view(self._inbox(common, extras, i, "confirm"))
            if outcome is not None and i not in self.byz:
                stash.outcomes[i] = outcome
        self._assert_view_safety(ended_view, stash)
        decided_digests = {
            o.digest for o in stash.outcomes.values() if o.status == "decided"
        }
        if decided_digests:
            for i in sorted(stash.outcomes):
                outcome = stash.outcomes[i]
                if outcome.status == "decided" and not outcome.behind:
                    for tx in self.nodes[i].log[-1][1].payload:
                        self.tx_decide.setdefault(tx, tick)
                    break
        self._record_view(ended_view, stash)
        del self.stash[ended_view]
        for i in awake_sorted:
            node = self.nodes[i]
            if node.armed_view == ended_view:
                msg = node.error_recovery_send()
                if msg is not None:
                    outbox.append((msg, None))

    def _boundary_begin(self, view: int, awake, awake_sorted, outbox,
                        tick: int) -> None:
        self._sync_pass(view, awake_sorted)
        stash = _ViewStash()
        stash.awake = len(awake)
        stash.byz_awake = len(awake & self.byz)
        stash.awake_ids = awake
        self.stash[view] = stash
        for i in awake_sorted:
            node = self.nodes[i]
            if node.begin_view(view):
                stash.began.add(i)
                if i not in self.byz:
                    stash.actives.add(node.cur.active)
                    stash.t_values.add(node.cur.t)
        for k in range(self.config.txs_per_view):
            txid = view * 1000 + k
            self.tx_submit[txid] = tick
            for i in awake_sorted:
                self.nodes[i].submit_tx(txid)
        for i in awake_sorted:
            outbox.extend(self.strategy.propose(self.nodes[i], view))

    def _finish(self) -> SimResult:
        final_logs = {
            i: tuple(d for d, _ in self.nodes[i].log)
            for i in self._honest(self.indices)
        }
        if self.monitor.observe(list(final_logs.values())):
            raise SafetyViolation("final logs diverged")
        evidence = sorted(
            {e for i in self._honest(self.indices) for e in self.nodes[i].evidence},
            key=lambda e: (e.view, e.node, e.kind),
        )
        tx_records = [
            TxRecord(
                scenario=self.config.name,
                seed=self.config.seed,
                variant=self.config.variant,
                txid=txid,
                submit_tick=submit,
                decide_tick=self.tx_decide.get(txid),
                censored=txid not in self.tx_decide,
            )
            for txid, submit in sorted(self.tx_submit.items())
        ]
        return SimResult(
            config=self.config,
            records=self.records,
            node_records=self.node_records,
            tx_records=tx_records,
            fork_events=self.monitor.sorted_events(),
            evidence=evidence,
            decided=self.decided,
            aborted=self.aborted,
            stalled=self.stalled,
            discarded_total=self.discarded_total,
            final_logs=final_logs,
        )


def run_scenario(config: ScenarioConfig) -> SimResult:
    """Run one scenario to completion under its configured variant."""
    if config.variant == "pvss-bft":
        return Simulation(config).run()
    from . import baselines

    if config.variant == "baseline-bft":
        return baselines.run_baseline_bft(config)
    if config.variant == "longest-chain":
        return baselines.run_longest_chain(config)
    raise ConfigError(f"unknown variant: {config.variant}")
