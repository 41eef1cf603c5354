"""Closed-form sighting probabilities and the estimators that check them.

A robot R obtains a report of robot R' within a window of delta
intervals either by meeting R' directly, or by meeting some robot at
interval u that met R' at an earlier interval v < u (news is carried in
the intermediary's history, which covers everything up to u-1).

The closed forms below treat every robot as having exactly the expected
degree n*p and treat sighting events as independent, so they are
approximations of the true random-graph probability.  The Monte Carlo
estimator and the exhaustive enumeration oracle compute the same
one-intermediary event on sampled and on fully enumerated graph
sequences respectively, which quantifies the approximation gap.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import ceil, comb, sqrt

import numpy as np

_MAX_ENUMERATION_SLOTS = 24
_MC_CHUNK = 20_000


class InfeasibleError(ValueError):
    """Raised when an instance is too large to enumerate exhaustively."""


@dataclass(frozen=True)
class ProbQuery:
    """Parameters of one sighting-probability question."""

    n: int
    p: float
    delta: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need at least 2 robots, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"edge probability must be in [0, 1], got {self.p}")
        if self.delta < 1:
            raise ValueError(f"window must be >= 1 intervals, got {self.delta}")


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo point estimate with its binomial standard error."""

    point: float
    trials: int
    std_error: float
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.point <= 1.0:
            raise ValueError(f"estimate must be a probability, got {self.point}")
        if self.std_error < 0.0:
            raise ValueError(f"standard error cannot be negative, got {self.std_error}")


def prob_no_report(q: ProbQuery) -> float:
    """Closed form: (1-p) ** ((1 + (delta-1)*n*p/2) * delta).

    The exponent counts delta direct chances plus, for each interval u
    in 2..delta, n*p expected intermediaries with u-1 earlier chances
    each: delta + (1 + 2 + ... + (delta-1)) * n * p.
    """
    exponent = (1.0 + (q.delta - 1) * q.n * q.p / 2.0) * q.delta
    return (1.0 - q.p) ** exponent


def prob_report_within(q: ProbQuery) -> float:
    """Complement of :func:`prob_no_report`."""
    return 1.0 - prob_no_report(q)


def prob_pair_meets_all(p: float, delta: int) -> float:
    """Probability that a fixed pair meets in every one of delta intervals: p**delta."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must be in [0, 1], got {p}")
    if delta < 1:
        raise ValueError(f"window must be >= 1 intervals, got {delta}")
    return p**delta


def _report_events(adj: np.ndarray) -> np.ndarray:
    """Report indicator for a batch of graph sequences.

    ``adj`` has shape (m, delta, n, n), symmetric boolean adjacency; R is
    vertex 0 and R' is vertex 1.  A trial counts if R meets R' in any
    interval, or meets at interval u someone who met R' at some v < u.
    """
    m, delta, n, _ = adj.shape
    direct = adj[:, :, 0, 1].any(axis=1)
    relayed = np.zeros(m, dtype=bool)
    met_target = np.zeros((m, n), dtype=bool)
    for t in range(delta):
        if t > 0:
            relayed |= (adj[:, t, 0, :] & met_target).any(axis=1)
        met_target |= adj[:, t, :, 1]
    return direct | relayed


def mc_report_within(q: ProbQuery, trials: int, seed: int) -> Estimate:
    """Estimate the report probability over independently sampled graph sequences.

    Trials run in seed-derived chunks (one child stream per chunk), so
    the estimate is reproducible and the chunks could run in parallel.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    chunks = (trials + _MC_CHUNK - 1) // _MC_CHUNK
    streams = np.random.SeedSequence(seed).spawn(chunks)
    tri = np.triu(np.ones((q.n, q.n), dtype=bool), k=1)
    hits = 0
    remaining = trials
    for stream in streams:
        m = min(_MC_CHUNK, remaining)
        remaining -= m
        rng = np.random.default_rng(stream)
        adj = (rng.random((m, q.delta, q.n, q.n)) < q.p) & tri
        adj |= adj.transpose(0, 1, 3, 2)
        hits += int(_report_events(adj).sum())
    point = hits / trials
    return Estimate(
        point=point,
        trials=trials,
        std_error=sqrt(point * (1.0 - point) / trials),
        seed=seed,
    )


def exact_small_enumeration(q: ProbQuery) -> float:
    """Exhaustively enumerate every graph sequence and sum report probabilities.

    All 2**(C(n,2)*delta) sequences are enumerated, each weighted by its
    exact probability.  Serves as an independent oracle for the Monte
    Carlo estimator and for sizing the closed form's approximation
    error, so it stays deliberately brute force.  Feasible only while
    C(n,2)*delta <= 24 edge slots.
    """
    pairs = list(combinations(range(q.n), 2))
    slots = len(pairs) * q.delta
    if slots > _MAX_ENUMERATION_SLOTS:
        raise InfeasibleError(
            f"{slots} edge slots exceed the {_MAX_ENUMERATION_SLOTS}-slot enumeration limit"
        )
    slot_index = {
        (t, pair): t * len(pairs) + k for t in range(q.delta) for k, pair in enumerate(pairs)
    }
    total = 0.0
    chunk = 1 << 20
    for start in range(0, 1 << slots, chunk):
        masks = np.arange(start, min(start + chunk, 1 << slots), dtype=np.uint64)
        bits = ((masks[:, None] >> np.arange(slots, dtype=np.uint64)) & 1).astype(bool)
        ones = bits.sum(axis=1)
        weights = (q.p**ones) * ((1.0 - q.p) ** (slots - ones))
        direct = np.zeros(len(masks), dtype=bool)
        for t in range(q.delta):
            direct |= bits[:, slot_index[(t, (0, 1))]]
        relayed = np.zeros(len(masks), dtype=bool)
        for k in range(2, q.n):
            for u in range(1, q.delta):
                meets_r = bits[:, slot_index[(u, (0, k))]]
                for v in range(u):
                    relayed |= meets_r & bits[:, slot_index[(v, (1, k))]]
        total += float(weights[direct | relayed].sum())
    return total


def pairing_threshold(n: int, p: float, alpha: float) -> int:
    """Paired-record count below which a robot looks suspicious: ceil((1-alpha)*n*p).

    Rounded up because a fractional record count is unattainable;
    rounding up is the conservative direction for trusting.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"assumed bad fraction must be in [0, 1), got {alpha}")
    return ceil((1.0 - alpha) * n * p)


def enumeration_slot_count(n: int, delta: int) -> int:
    """Edge slots an exhaustive enumeration of (n, delta) would need."""
    return comb(n, 2) * delta
