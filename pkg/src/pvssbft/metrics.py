"""Run metrics: per-view records, fork detection, and stable exports.

A fork is two logs holding different block digests at the same height.
`detect_fork` scans every height of every log; `ForkMonitor` reaches the
same verdict per view in O(distinct tips) by exploiting that each digest
commits to its whole ancestry, so two chains with equal tip and length
are equal, and a shorter chain is a prefix of a longer one iff its tip
appears at the matching height in the longer one.

Discard accounting is two-tier: a block counts as discarded only if it
(a) reached a vote quorum somewhere (a confirm went out for it, or a
baseline branch adopted it) and (b) was later abandoned rather than
decided.  Proposals that simply lost leader election never count.

CSV and JSON writers emit "\n" line endings and sorted keys so repeated
runs with one seed are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

__all__ = [
    "VIEW_COLUMNS",
    "NODE_COLUMNS",
    "LATENCY_COLUMNS",
    "MetricsRecord",
    "NodeRecord",
    "TxRecord",
    "ForkEvent",
    "detect_fork",
    "ForkMonitor",
    "write_views_csv",
    "write_nodes_csv",
    "write_latency_csv",
    "write_summary_json",
    "read_csv_rows",
]

VIEW_COLUMNS = [
    "scenario",
    "seed",
    "view",
    "variant",
    "outcome",
    "latency_ticks",
    "discarded",
    "forks_cum",
    "chain_len_min",
    "chain_len_max",
    "awake",
    "byz_awake",
]

NODE_COLUMNS = [
    "scenario",
    "seed",
    "view",
    "node",
    "awake",
    "member",
    "byzantine",
    "decided",
    "chain_len",
]

LATENCY_COLUMNS = [
    "scenario",
    "seed",
    "variant",
    "txid",
    "submit_tick",
    "decide_tick",
    "latency_ticks",
    "censored",
]

ForkEvent = Tuple[int, bytes, bytes]  # (height, digest_a, digest_b), a < b


@dataclass(frozen=True, slots=True)
class MetricsRecord:
    """One global row per view (or per slot for the chain baseline)."""

    scenario: str
    seed: int
    view: int
    variant: str
    outcome: str  # "decided" | "aborted" | "forked"
    latency_ticks: Optional[int]
    discarded: int
    forks_cum: int
    chain_len_min: int
    chain_len_max: int
    awake: int
    byz_awake: int

    def row(self) -> List[str]:
        return [
            self.scenario,
            str(self.seed),
            str(self.view),
            self.variant,
            self.outcome,
            "" if self.latency_ticks is None else str(self.latency_ticks),
            str(self.discarded),
            str(self.forks_cum),
            str(self.chain_len_min),
            str(self.chain_len_max),
            str(self.awake),
            str(self.byz_awake),
        ]


@dataclass(frozen=True, slots=True)
class NodeRecord:
    scenario: str
    seed: int
    view: int
    node: int
    awake: bool
    member: bool
    byzantine: bool
    decided: bool
    chain_len: int

    def row(self) -> List[str]:
        return [
            self.scenario,
            str(self.seed),
            str(self.view),
            str(self.node),
            str(int(self.awake)),
            str(int(self.member)),
            str(int(self.byzantine)),
            str(int(self.decided)),
            str(self.chain_len),
        ]


@dataclass(frozen=True, slots=True)
class TxRecord:
    """Submission-to-finality probe; censored entries never finalized."""

    scenario: str
    seed: int
    variant: str
    txid: int
    submit_tick: int
    decide_tick: Optional[int]
    censored: bool

    @property
    def latency_ticks(self) -> Optional[int]:
        if self.decide_tick is None:
            return None
        return self.decide_tick - self.submit_tick

    def row(self) -> List[str]:
        return [
            self.scenario,
            str(self.seed),
            self.variant,
            str(self.txid),
            str(self.submit_tick),
            "" if self.decide_tick is None else str(self.decide_tick),
            "" if self.latency_ticks is None else str(self.latency_ticks),
            str(int(self.censored)),
        ]


def detect_fork(logs: Sequence[Sequence[bytes]]) -> List[ForkEvent]:
    """All conflicting digest pairs at equal heights across `logs`.

    Two logs conflict at height h exactly when both extend past h with
    different digests, so collecting the distinct digests per height
    covers every pair of logs at every height.
    """
    by_height: Dict[int, Set[bytes]] = {}
    for log in logs:
        for h, d in enumerate(log):
            by_height.setdefault(h, set()).add(d)
    events: List[ForkEvent] = []
    for h in sorted(by_height):
        distinct = sorted(by_height[h])
        for i in range(len(distinct)):
            for j in range(i + 1, len(distinct)):
                events.append((h, distinct[i], distinct[j]))
    return events


class ForkMonitor:
    """Accumulates fork events across views without rescanning logs.

    `observe` assumes each log is a hash chain (digest commits to the
    ancestry).  Logs are deduplicated by (length, tip); one representative
    per class is compared against the others, and a full height scan runs
    only for the rare incompatible pair.  Events deduplicate across
    views, so a divergence that persists is counted once.
    """

    def __init__(self) -> None:
        self.events: Set[ForkEvent] = set()

    def observe(self, logs: Sequence[Sequence[bytes]]) -> int:
        """Ingest the current logs; returns the number of new events."""
        classes: Dict[Tuple[int, bytes], Sequence[bytes]] = {}
        for log in logs:
            if log:
                classes.setdefault((len(log), log[-1]), log)
        reps = [classes[key] for key in sorted(classes)]
        before = len(self.events)
        for i in range(len(reps)):
            for j in range(i + 1, len(reps)):
                a, b = reps[i], reps[j]
                if len(a) > len(b):
                    a, b = b, a
                if b[len(a) - 1] == a[-1]:
                    continue  # shorter chain is a committed prefix
                for h in range(len(a)):
                    if a[h] != b[h]:
                        pair = (a[h], b[h]) if a[h] < b[h] else (b[h], a[h])
                        self.events.add((h, pair[0], pair[1]))
        return len(self.events) - before

    @property
    def fork_count(self) -> int:
        return len(self.events)

    def sorted_events(self) -> List[ForkEvent]:
        return sorted(self.events)


def _write_rows(path: str, header: List[str], rows: List[List[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_views_csv(records: Sequence[MetricsRecord], path: str) -> None:
    _write_rows(path, VIEW_COLUMNS, [r.row() for r in records])


def write_nodes_csv(records: Sequence[NodeRecord], path: str) -> None:
    _write_rows(path, NODE_COLUMNS, [r.row() for r in records])


def write_latency_csv(records: Sequence[TxRecord], path: str) -> None:
    _write_rows(path, LATENCY_COLUMNS, [r.row() for r in records])


def write_summary_json(summary: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_csv_rows(path: str) -> List[Dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
