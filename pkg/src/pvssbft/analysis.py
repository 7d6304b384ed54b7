"""Churn analytics: how per-second sleep/wake flips erode a view.

Model: each node flips its awake state once per second with
probability p, a view spans four one-second phases, and a node counts
for phase j only if it has not slept since the view began.  Nodes that
sleep are struck from the view ("confirmed sleepy"); nodes that wake
mid-view may re-enter at the next boundary.  The module provides

  * expected per-phase active and sleepy counts for a view entered
    with ex1 active nodes,
  * the steady-state value of ex1 under the view-to-view recursion,
  * the probability that the vote threshold (half the entering actives
    alive at phase 3) and the confirm threshold (half the undetected
    actives alive at phase 4) are both met, exactly and under a normal
    approximation,
  * the per-phase flip bound p <= 1 - 2^(-1/3) below which the vote
    threshold holds in expectation, and the fraction of a view's
    entrants that bound lets sleep at some point during the view.

Every closed form has a Monte-Carlo twin (mc_*) that samples the same
event structure, including its two quirks, which are kept because the
closed forms are the contract: the two wake-up pools feeding the next
view overlap, so re-entry is double counted and the recursion can
exceed n transiently; and because wake-ups contribute O(p) while the
four leak chances cost O(4p), the steady state tends to n/3 as p goes
to zero instead of recovering full participation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Tuple

import numpy as np

__all__ = [
    "ChurnParams",
    "PhaseExpectation",
    "DegenerateInputError",
    "expected_actives",
    "steady_state_ex1",
    "success_probabilities",
    "success_probabilities_normal",
    "max_tolerable_p",
    "round_offline_tolerance",
    "mc_phase_expectation",
    "mc_steady_state",
    "mc_success_probabilities",
]


class DegenerateInputError(ValueError):
    """Parameters for which the requested quantity is undefined."""


@dataclass(frozen=True, slots=True)
class ChurnParams:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise DegenerateInputError("n must be at least 1")
        if not 0.0 <= self.p <= 1.0:
            raise DegenerateInputError("p must lie in [0, 1]")


@dataclass(frozen=True, slots=True)
class PhaseExpectation:
    """Expected counts for one view entered with ex_phase[0] actives."""

    ex_phase: Tuple[float, float, float, float]  # E[X1]..E[X4]
    sleepy: Tuple[float, float]                  # E[S2], E[S3]
    newly_active: float                          # E[Y]


def expected_actives(params: ChurnParams, ex1: float) -> PhaseExpectation:
    """Per-phase expectations given ex1 actives entering the view.

    Actives decay by survival powers (1-p)^2, (1-p)^3, (1-p)^4 for
    phases 2..4; sleepy detections lag one second behind; the wake-up
    count sums the asleep-at-entry pool surviving three seconds and
    the asleep-after-one-second pool surviving two.
    """
    if not 0.0 <= ex1 <= params.n:
        raise DegenerateInputError("ex1 must lie in [0, n]")
    p, n = params.p, params.n
    q = 1.0 - p
    phases = (ex1, ex1 * q ** 2, ex1 * q ** 3, ex1 * q ** 4)
    sleepy = (ex1 * p, ex1 * (1.0 - q ** 2))
    newly = (n - ex1) * p * q ** 3 + (n - ex1 * q) * p * q ** 2
    return PhaseExpectation(ex_phase=phases, sleepy=sleepy, newly_active=newly)


def _next_ex1(params: ChurnParams, ex1: float) -> float:
    # the recursion can transiently exceed n (overlapping wake-up pools);
    # clamp so expected_actives' domain check stays satisfied
    x = min(ex1, float(params.n))
    est = expected_actives(params, x)
    return x * (1.0 - params.p) ** 4 + est.newly_active


def steady_state_ex1(params: ChurnParams, start: float | None = None,
                     rel_tol: float = 1e-12) -> float:
    """Fixed point of the view-to-view recursion for E[X1].

    The recursion is affine in ex1, so the closed-form root seeds the
    iteration; an explicit start exercises convergence from elsewhere.
    """
    p, n = params.p, params.n
    if not 0.0 < p < 1.0:
        raise DegenerateInputError("steady state requires 0 < p < 1")
    q = 1.0 - p
    if start is None:
        start = n * p * q * q * (2.0 - p) / (1.0 - q ** 4 + 2.0 * p * q ** 3)
    x = float(start)
    for _ in range(1_000_000):
        nxt = _next_ex1(params, x)
        if abs(nxt - x) <= rel_tol * max(abs(nxt), 1e-300):
            return nxt
        x = nxt
    raise ArithmeticError("fixed-point iteration did not converge")


def _binom_pmf(n: int, q: float) -> np.ndarray:
    k = np.arange(n + 1)
    if q <= 0.0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    if q >= 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    logs = (
        np.array([math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
                  for i in k])
        + k * math.log(q)
        + (n - k) * math.log1p(-q)
    )
    return np.exp(logs)


def success_probabilities(params: ChurnParams) -> Tuple[float, float]:
    """Exact (vote, confirm-given-vote) success probabilities.

    A view entered at full strength: X1 = n.  Vote succeeds when the
    nodes still alive after three seconds number at least X1/2.
    Confirm additionally needs the survivors of the fourth second to
    reach half of the actives not yet detected sleepy, (X1 - S2)/2.
    Computed by conditioning: S2 ~ Bin(n, p); alive-at-3 among the
    rest ~ Bin(n - S2, (1-p)^2); alive-at-4 ~ Bin(alive-at-3, 1-p).
    """
    n, p = params.n, params.p
    q = 1.0 - p
    # vote margin ignores S2: alive-at-3 is Bin(n, q^3) outright
    pmf3 = _binom_pmf(n, q ** 3)
    p_vote = float(pmf3[math.ceil(n / 2):].sum())
    if p_vote == 0.0:
        return 0.0, 0.0
    p_joint = 0.0
    pmf_s2 = _binom_pmf(n, p)
    vote_thr = math.ceil(n / 2)
    # suffix4[m3][k] = P(Bin(m3, q) >= k); s2-independent, so cache it
    suffix4 = {}
    for s2 in range(n + 1):
        w_s2 = pmf_s2[s2]
        if w_s2 == 0.0:
            continue
        alive1 = n - s2
        confirm_thr = math.ceil(alive1 / 2)
        pmf_alive3 = _binom_pmf(alive1, q ** 2)
        for m3 in range(vote_thr, alive1 + 1):
            w3 = pmf_alive3[m3]
            if w3 == 0.0:
                continue
            if m3 not in suffix4:
                suffix4[m3] = np.cumsum(_binom_pmf(m3, q)[::-1])[::-1]
            if confirm_thr <= m3:
                p_joint += w_s2 * w3 * float(suffix4[m3][confirm_thr])
    return p_vote, float(p_joint / p_vote)


def success_probabilities_normal(params: ChurnParams) -> Tuple[float, float]:
    """Normal-approximation variant of success_probabilities.

    Thresholds use the expected sleepy count; both tails carry a 0.5
    continuity correction.  Meant for comparison, not precision.
    """
    n, p = params.n, params.p
    q = 1.0 - p
    norm = NormalDist()

    def tail(mean: float, var: float, thr: float) -> float:
        if var <= 0.0:
            return 1.0 if mean >= thr else 0.0
        return 1.0 - norm.cdf((thr - 0.5 - mean) / math.sqrt(var))

    q3, q4 = q ** 3, q ** 4
    p_vote = tail(n * q3, n * q3 * (1.0 - q3), math.ceil(n / 2))
    thr4 = math.ceil(n * (1.0 - p) / 2.0)
    p_confirm = tail(n * q4, n * q4 * (1.0 - q4), thr4)
    return min(1.0, p_vote), min(1.0, p_confirm)


def max_tolerable_p() -> float:
    """Largest flip probability keeping E[X3] >= E[X1]/2: 1 - 2^(-1/3)."""
    return 1.0 - 2.0 ** (-1.0 / 3.0)


def round_offline_tolerance(p: float) -> float:
    """Fraction of a view's entrants expected to sleep at some point
    during its four seconds: 1 - (1-p)^4."""
    if not 0.0 <= p <= 1.0:
        raise DegenerateInputError("p must lie in [0, 1]")
    return 1.0 - (1.0 - p) ** 4


# ---------------------------------------------------------------------------
# Monte-Carlo twins
#
# Each sampler reproduces the event structure of its closed form at the
# node level: a node's first sleep second is multinomial over
# {1, 2, 3, 4, never}, and the wake-up pools are drawn with the same
# overlap the formulas assume.  Independent per-node draws let trials
# be aggregated, so totals are sampled in one multinomial per batch.


def _categories(p: float) -> list:
    q = 1.0 - p
    return [p, q * p, q * q * p, q ** 3 * p, q ** 4]


def mc_phase_expectation(params: ChurnParams, ex1: int, trials: int,
                         seed: int = 0) -> Tuple[PhaseExpectation, PhaseExpectation]:
    """Sampled (means, standard errors) matching expected_actives."""
    if not 0 <= ex1 <= params.n:
        raise DegenerateInputError("ex1 must lie in [0, n]")
    n, p = params.n, params.p
    q = 1.0 - p
    rng = np.random.default_rng(seed)
    cats = rng.multinomial(ex1, _categories(p), size=trials).astype(np.float64)
    t1, t2, t3, t4, surv = cats.T
    x2 = t3 + t4 + surv
    x3 = t4 + surv
    x4 = surv
    s2 = t1
    s3 = t1 + t2
    pool1 = rng.binomial(n - ex1, p * q ** 3, size=trials)
    pool2_sizes = (n - ex1 + t1).astype(np.int64)
    pool2 = rng.binomial(pool2_sizes, p * q ** 2)
    y = pool1 + pool2

    def stats(a: np.ndarray) -> Tuple[float, float]:
        return float(a.mean()), float(a.std(ddof=1) / math.sqrt(trials))

    means, errs = zip(*(stats(a) for a in (x2, x3, x4, s2, s3, y)))
    mean = PhaseExpectation(
        ex_phase=(float(ex1), means[0], means[1], means[2]),
        sleepy=(means[3], means[4]),
        newly_active=means[5],
    )
    err = PhaseExpectation(
        ex_phase=(0.0, errs[0], errs[1], errs[2]),
        sleepy=(errs[3], errs[4]),
        newly_active=errs[5],
    )
    return mean, err


def mc_steady_state(params: ChurnParams, rounds: int = 100_000,
                    seed: int = 0, burn_in: int = 1_000) -> float:
    """Long-run mean of the sampled view-to-view recursion."""
    n, p = params.n, params.p
    if not 0.0 < p < 1.0:
        raise DegenerateInputError("steady state requires 0 < p < 1")
    q = 1.0 - p
    rng = np.random.default_rng(seed)
    x = n // 2
    total = 0.0
    for k in range(rounds + burn_in):
        entering = min(x, n)
        survivors = rng.binomial(entering, q ** 4)
        slept1 = rng.binomial(entering, p)
        pool1 = rng.binomial(n - entering, p * q ** 3)
        pool2 = rng.binomial(n - entering + slept1, p * q ** 2)
        x = int(survivors + pool1 + pool2)
        if k >= burn_in:
            total += x
    return total / rounds


def mc_success_probabilities(params: ChurnParams, trials: int = 10_000,
                             seed: int = 0) -> Tuple[float, float]:
    """Sampled (vote, confirm-given-vote) frequencies at X1 = n."""
    n = params.n
    rng = np.random.default_rng(seed)
    cats = rng.multinomial(n, _categories(params.p), size=trials)
    t1 = cats[:, 0]
    x3 = cats[:, 3] + cats[:, 4]
    x4 = cats[:, 4]
    vote = x3 * 2 >= n
    confirm = x4 * 2 >= n - t1
    p_vote = float(vote.mean())
    hits = int(vote.sum())
    if hits == 0:
        return p_vote, 0.0
    return p_vote, float((vote & confirm).sum() / hits)
