"""Per-interval encounter graphs: binomial sampling and neighbor queries.

Each interval's communication reach is one draw of a binomial random
graph G(n, p): every unordered pair of robots meets independently with
probability p.  Intervals are sampled independently; callers pass a
seeded ``numpy.random.Generator`` (PCG64) so every graph is reproducible
from a run's root seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class EncounterGraph:
    """Who met whom during one interval; vertices are robot ids 1..n."""

    n: int
    interval: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for u, v in self.edges:
            if not (1 <= u < v <= self.n):
                raise ValueError(f"edge ({u}, {v}) is not a normalized pair within 1..{self.n}")


def gen_interval_graph(n: int, p: float, rng: np.random.Generator, interval: int = 1) -> EncounterGraph:
    """Sample G(n, p): each of the C(n, 2) pairs joined independently with probability p."""
    if n < 1:
        raise ValueError(f"vertex count must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must be in [0, 1], got {p}")
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    edges = frozenset((int(u) + 1, int(v) + 1) for u, v in zip(iu[mask], ju[mask]))
    return EncounterGraph(n=n, interval=interval, edges=edges)


@lru_cache(maxsize=4096)
def _adjacency(g: EncounterGraph) -> dict[int, frozenset[int]]:
    adj: dict[int, set[int]] = {v: set() for v in range(1, g.n + 1)}
    for u, v in g.edges:
        adj[u].add(v)
        adj[v].add(u)
    return {v: frozenset(nb) for v, nb in adj.items()}


def neighbors(g: EncounterGraph, v: int) -> frozenset[int]:
    """The robots sharing an edge with ``v`` in this interval's graph."""
    if not 1 <= v <= g.n:
        raise ValueError(f"vertex {v} out of range 1..{g.n}")
    return _adjacency(g)[v]


def edge_list_text(g: EncounterGraph) -> str:
    """Debug export: one "u v" pair per line, sorted."""
    return "\n".join(f"{u} {v}" for u, v in sorted(g.edges))
