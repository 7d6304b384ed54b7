"""Comparison protocols: a share-less four-phase BFT and a longest chain.

The BFT baseline keeps the four-tick view clock, the VRF leader
rotation, and the same quorum threshold (floor(n/2) + 1), but removes
the share layer: proposals carry raw blocks and votes are plain
digests.  Nothing binds a proposal network-wide, so an equivocating
leader can show two blocks to the two halves of the network, and for
that view each half relays votes and confirms only within itself (the
leader shaped who hears what).  Byzantine nodes vote and confirm both
blocks, so both halves can assemble a quorum and decide conflicting
blocks at one height: a fork.  The cross-half traffic of the following
view exposes the conflict, and one view after the fork the losing
branch (shorter, or on equal length the one with the lexicographically
larger tip) is discarded and every node re-merges onto the winner.
Views with an honest leader have no adversary surface and proceed
exactly like the main protocol; membership is the full node set
throughout, so these runs are meant for full-participation comparisons.
A re-merge also serves as catch-up for nodes that slept through a
boundary: their prefix log adopts the longest chain at zero discard
cost.

In the result, `decided`/`aborted` count only cleanly decided and
undecided views; rows with outcome "forked" are counted by the fork
monitor instead, so the two counters can sum below the row count.

The longest-chain baseline mints at most one block per 15-tick slot: a
uniformly chosen awake node extends the longest known chain (awakened
nodes are granted a chain sync, so the chain is global and ties never
arise); a slot with nobody awake mints nothing.  A block is confirmed
once CONFIRM_DEPTH blocks extend it.  Transactions are submitted at
uniformly random ticks, enter the next minted block, and their latency
runs until their block is CONFIRM_DEPTH deep; transactions still
unconfirmed when the run ends are reported censored.  Adversarial
behaviour is not modelled for this variant; the byzantine count only
flows into the awake/byz_awake columns.
"""

from __future__ import annotations

import random
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from .group import group_setup
from .metrics import ForkMonitor, MetricsRecord, NodeRecord, TxRecord
from .protocol import Evidence, quorum_threshold, select_leader
from .pvss import keygen
from .simnet import (
    AllAwake,
    ChurnSchedule,
    ConfigError,
    FastPolicy,
    SafetyViolation,
    ScenarioConfig,
    SimResult,
)
from .wire import GENESIS_HASH, Block, block_digest

__all__ = ["SLOT_TICKS", "CONFIRM_DEPTH", "run_baseline_bft", "run_longest_chain"]

SLOT_TICKS = 15
CONFIRM_DEPTH = 10

GLOBAL = -1  # relay tag for messages not confined to a half


class _BftNode:
    __slots__ = ("index", "log", "pending", "pending_set", "decided_txs")

    def __init__(self, index: int):
        self.index = index
        self.log: List[Tuple[bytes, Block]] = []
        self.pending: List[int] = []
        self.pending_set: Set[int] = set()
        self.decided_txs: Set[int] = set()

    def tip(self) -> bytes:
        return self.log[-1][0] if self.log else GENESIS_HASH

    def submit(self, txid: int) -> None:
        if txid not in self.pending_set and txid not in self.decided_txs:
            self.pending.append(txid)
            self.pending_set.add(txid)

    def apply(self, block: Block) -> None:
        self.log.append((block_digest(block), block))
        for tx in block.payload:
            self.decided_txs.add(tx)
            self.pending_set.discard(tx)
        self.pending = [tx for tx in self.pending if tx not in self.decided_txs]


class BaselineBftSim:
    """Digest-vote BFT on the four-tick clock; forks need a malicious leader."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        if config.variant != "baseline-bft":
            raise ConfigError("BaselineBftSim runs the baseline-bft variant only")
        self.config = config
        self.group = group_setup(config.profile)
        # same key stream and VRF ranks as the main protocol, so a given
        # seed rotates leaders identically across variants
        self.policy = FastPolicy(self.group, master_seed=config.seed)
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
        self.nodes = {i: _BftNode(i) for i in self.indices}
        self.t = quorum_threshold(config.n)
        self.monitor = ForkMonitor()
        self.records: List[MetricsRecord] = []
        self.node_records: List[NodeRecord] = []
        self.tx_submit: Dict[int, int] = {}
        self.tx_decide: Dict[int, int] = {}
        self.decided = 0
        self.aborted = 0
        self.discarded_total = 0

    # -- helpers --

    def _check_awake_majority(self, tick: int, awake: FrozenSet[int]) -> None:
        if not self.config.safety_valid or not awake:
            return
        if 2 * len(awake & self.byz) >= len(awake):
            raise SafetyViolation(f"tick {tick}: byzantine majority among awake")

    def _honest(self):
        return (i for i in self.indices if i not in self.byz)

    def _equivocates(self) -> bool:
        return bool(self.byz) and self.config.strategy == "equivocating-leader"

    def _reconcile(self) -> int:
        """Merge diverged logs onto one branch: the longest wins, equal
        lengths go to the smaller tip digest.  Nodes whose log is a
        prefix of the winner just catch up.  Returns discarded blocks."""
        classes: Dict[Tuple[int, bytes], int] = {}
        for i in self.indices:
            node = self.nodes[i]
            if node.log:
                classes.setdefault((len(node.log), node.tip()), i)
        if len(classes) <= 1:
            return 0
        winner = self.nodes[classes[min(classes, key=lambda c: (-c[0], c[1]))]]
        dropped: Set[bytes] = set()
        for i in self.indices:
            node = self.nodes[i]
            if node is winner or (node.log and node.tip() == winner.tip()):
                continue
            shared = 0
            limit = min(len(node.log), len(winner.log))
            while shared < limit and node.log[shared][0] == winner.log[shared][0]:
                shared += 1
            for digest, block in node.log[shared:]:
                dropped.add(digest)
                for tx in block.payload:
                    node.decided_txs.discard(tx)
                    node.submit(tx)
            node.log = node.log[:shared]
            for digest, block in winner.log[shared:]:
                node.apply(block)
        if dropped:
            # a transaction stays decided only if the surviving branch has it
            survivors = winner.decided_txs
            for txid in list(self.tx_decide):
                if txid not in survivors:
                    del self.tx_decide[txid]
        return len(dropped)

    def _record_view(self, view: int, appended: Dict[int, bytes], forked: bool,
                     discarded: int, awake_count: int, byz_awake: int,
                     awake_ids: FrozenSet[int]) -> None:
        if forked:
            outcome = "forked"
        elif appended:
            outcome = "decided"
            self.decided += 1
        else:
            outcome = "aborted"
            self.aborted += 1
        self.discarded_total += discarded
        heights = [len(self.nodes[i].log) for i in self._honest()]
        self.records.append(
            MetricsRecord(
                scenario=self.config.name,
                seed=self.config.seed,
                view=view,
                variant=self.config.variant,
                outcome=outcome,
                latency_ticks=4 if outcome == "decided" else None,
                discarded=discarded,
                forks_cum=self.monitor.fork_count,
                chain_len_min=min(heights),
                chain_len_max=max(heights),
                awake=awake_count,
                byz_awake=byz_awake,
            )
        )
        if self.config.collect_node_records:
            for i in self.indices:
                self.node_records.append(
                    NodeRecord(
                        scenario=self.config.name,
                        seed=self.config.seed,
                        view=view,
                        node=i,
                        awake=i in awake_ids,
                        member=True,
                        byzantine=i in self.byz,
                        decided=i in appended,
                        chain_len=len(self.nodes[i].log),
                    )
                )

    # -- main loop --

    def run(self) -> SimResult:
        cfg = self.config
        equiv = self._equivocates()
        # per-view message state; "sent at T, delivered at T+1" is realised
        # by consuming each list one phase after it was filled
        proposals: Dict[int, List[Tuple[Block, object]]] = {}
        equiv_blocks: Dict[int, Tuple[Block, Block]] = {}
        seen: Dict[int, Tuple[bytes, Block]] = {}
        group_of: Dict[int, int] = {}
        leader_of: Dict[int, Optional[int]] = {}
        votes: List[Tuple[bytes, int]] = []
        confirms: List[Tuple[bytes, int]] = []
        view_awake = (0, 0)
        view_awake_ids: FrozenSet[int] = frozenset()
        reconcile_armed = False

        for tick in range(4 * cfg.views + 1):
            awake = self.churn.awake_set(tick)
            self._check_awake_majority(tick, awake)
            awake_sorted = sorted(awake)
            view, phase = divmod(tick, 4)

            if phase == 0:
                if view >= 1:
                    appended: Dict[int, bytes] = {}
                    for i in awake_sorted:
                        node = self.nodes[i]
                        grp = group_of.get(i, GLOBAL)
                        got = seen.get(i)
                        if got is None:
                            continue
                        digest, block = got
                        count = sum(1 for d, g in confirms
                                    if d == digest and (g == GLOBAL or g == grp))
                        if count >= self.t and block.parent_hash == node.tip():
                            node.apply(block)
                            if i not in self.byz:
                                appended[i] = digest
                                for tx in block.payload:
                                    self.tx_decide.setdefault(tx, tick)
                    new_events = self.monitor.observe(
                        [[d for d, _ in self.nodes[i].log] for i in self._honest()]
                    )
                    discarded = 0
                    if reconcile_armed:
                        discarded = self._reconcile()
                        reconcile_armed = False
                    if len({self.nodes[i].tip() for i in self.indices}) > 1:
                        # divergence surfaces through this view's cross-half
                        # traffic; the merge lands one view later
                        reconcile_armed = True
                    self._record_view(view - 1, appended, bool(new_events),
                                      discarded, view_awake[0], view_awake[1],
                                      view_awake_ids)
                if view >= cfg.views:
                    break
                view_awake = (len(awake), len(awake & self.byz))
                view_awake_ids = awake
                proposals, equiv_blocks, seen = {}, {}, {}
                group_of, leader_of = {}, {}
                votes, confirms = [], []
                for k in range(cfg.txs_per_view):
                    txid = view * 1000 + k
                    self.tx_submit[txid] = tick
                    for i in awake_sorted:
                        self.nodes[i].submit(txid)
                for i in awake_sorted:
                    node = self.nodes[i]
                    payload = tuple(tx for tx in node.pending
                                    if tx not in node.decided_txs)
                    block = Block(parent_hash=node.tip(), view=view,
                                  payload=payload, proposer=i)
                    vrf = self.policy.make_vrf(i, view)
                    if equiv and i in self.byz:
                        alt = Block(parent_hash=node.tip(), view=view,
                                    payload=payload + (999_000_000 + view,),
                                    proposer=i)
                        equiv_blocks[i] = (alt, block)  # evens get alt
                        for r in self.indices:
                            proposals.setdefault(r, []).append(
                                ((alt, block)[r % 2], vrf)
                            )
                    else:
                        for r in self.indices:
                            proposals.setdefault(r, []).append((block, vrf))

            elif phase == 1:
                # proposals delivered; pick the leader and, under an
                # equivocating leader, inherit its half-split relay topology
                for i in awake_sorted:
                    got = proposals.get(i, [])
                    ranks = {b.proposer: v.rho for b, v in got}
                    leader = select_leader(ranks)
                    leader_of[i] = leader
                    if leader is None:
                        continue
                    block = next(b for b, _ in got if b.proposer == leader)
                    seen[i] = (block_digest(block), block)
                    group_of[i] = i % 2 if leader in equiv_blocks else GLOBAL

            elif phase == 2:
                for i in awake_sorted:
                    leader = leader_of.get(i)
                    if leader is None or i not in seen:
                        continue
                    if i in self.byz and leader in equiv_blocks:
                        # colluders back both branches, one vote per half
                        alt, orig = equiv_blocks[leader]
                        votes.append((block_digest(alt), 0))
                        votes.append((block_digest(orig), 1))
                        continue
                    digest, block = seen[i]
                    if block.parent_hash == self.nodes[i].tip():
                        votes.append((digest, group_of[i]))

            else:
                # votes delivered within their half; a quorum turns into a
                # confirm that again only travels within the half
                for i in awake_sorted:
                    leader = leader_of.get(i)
                    if leader is None or i not in seen:
                        continue
                    if i in self.byz and leader in equiv_blocks:
                        alt, orig = equiv_blocks[leader]
                        confirms.append((block_digest(alt), 0))
                        confirms.append((block_digest(orig), 1))
                        continue
                    digest, _ = seen[i]
                    grp = group_of[i]
                    count = sum(1 for d, g in votes
                                if d == digest and (g == GLOBAL or g == grp))
                    if count >= self.t:
                        confirms.append((digest, grp))

        return self._finish()

    def _finish(self) -> SimResult:
        final_logs = {
            i: tuple(d for d, _ in self.nodes[i].log) for i in self._honest()
        }
        self.monitor.observe([list(log) for log in final_logs.values()])
        evidence: List[Evidence] = []
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
            stalled=0,
            discarded_total=self.discarded_total,
            final_logs=final_logs,
        )


class LongestChainSim:
    """One block per slot on a global chain; confirmation is depth-based."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        if config.variant != "longest-chain":
            raise ConfigError("LongestChainSim runs the longest-chain variant only")
        self.config = config
        self.indices = list(range(1, config.n + 1))
        self.byz = frozenset(self.indices[config.n - config.byzantine:])
        if config.churn is None:
            self.churn = AllAwake(config.n)
        else:
            self.churn = ChurnSchedule(
                config.churn, config.n, random.Random(f"{config.seed}:churn")
            )

    def run(self) -> SimResult:
        cfg = self.config
        slots = cfg.views
        total_ticks = SLOT_TICKS * slots
        leader_rng = random.Random(f"{cfg.seed}:lc-leader")
        tx_rng = random.Random(f"{cfg.seed}:lc-tx")
        tx_submit = {
            txid: tx_rng.randrange(total_ticks)
            for txid in range(slots * cfg.txs_per_view)
        }
        by_tick = sorted(tx_submit, key=lambda t: (tx_submit[t], t))
        tx_decide: Dict[int, int] = {}
        chain: List[Tuple[int, bytes, Block]] = []  # (mint tick, digest, block)
        records: List[MetricsRecord] = []
        next_tx = 0
        decided = aborted = 0

        for slot in range(slots):
            tick = slot * SLOT_TICKS
            awake = self.churn.awake_set(tick)
            if awake:
                leader = leader_rng.choice(sorted(awake))
                payload: List[int] = []
                while next_tx < len(by_tick) and tx_submit[by_tick[next_tx]] < tick:
                    payload.append(by_tick[next_tx])
                    next_tx += 1
                parent = chain[-1][1] if chain else GENESIS_HASH
                block = Block(parent_hash=parent, view=slot,
                              payload=tuple(payload), proposer=leader)
                chain.append((tick, block_digest(block), block))
                if len(chain) > CONFIRM_DEPTH:
                    # the block CONFIRM_DEPTH levels down is now buried
                    for tx in chain[-1 - CONFIRM_DEPTH][2].payload:
                        tx_decide[tx] = tick
                decided += 1
            else:
                aborted += 1
            records.append(
                MetricsRecord(
                    scenario=cfg.name,
                    seed=cfg.seed,
                    view=slot,
                    variant=cfg.variant,
                    outcome="decided" if awake else "aborted",
                    latency_ticks=None,
                    discarded=0,
                    forks_cum=0,
                    chain_len_min=len(chain),
                    chain_len_max=len(chain),
                    awake=len(awake),
                    byz_awake=len(awake & self.byz),
                )
            )

        digests = tuple(d for _, d, _ in chain)
        tx_records = [
            TxRecord(
                scenario=cfg.name,
                seed=cfg.seed,
                variant=cfg.variant,
                txid=txid,
                submit_tick=submit,
                decide_tick=tx_decide.get(txid),
                censored=txid not in tx_decide,
            )
            for txid, submit in sorted(tx_submit.items())
        ]
        return SimResult(
            config=cfg,
            records=records,
            node_records=[],
            tx_records=tx_records,
            fork_events=[],
            evidence=[],
            decided=decided,
            aborted=aborted,
            stalled=0,
            discarded_total=0,
            final_logs={i: digests for i in self.indices if i not in self.byz},
        )


def run_baseline_bft(config: ScenarioConfig) -> SimResult:
    return BaselineBftSim(config).run()


def run_longest_chain(config: ScenarioConfig) -> SimResult:
    return LongestChainSim(config).run()
