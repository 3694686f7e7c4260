"""Directed communication graphs and the consensus-averaging stage.

Agents are indexed ``0 .. N-1``. An edge ``(j, i)`` means agent ``i`` receives
agent ``j``'s state, so ``j`` is an in-neighbor of ``i``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ._backend import core
from .counters import add_flops

__all__ = [
    "DirectedGraph",
    "is_strongly_connected",
    "fully_connected",
    "from_edges",
    "consensus_step",
    "consensus_array",
]


@dataclass(frozen=True)
class DirectedGraph:
    """Static directed graph over ``num_agents`` agents.

    Attributes:
        num_agents: Number of agents N.
        edges: Ordered pairs ``(j, i)``; ``i`` receives from ``j``. Self-loops
            ``(i, i)`` put an agent's own state into its average.
    """

    num_agents: int
    edges: frozenset
    _indptr: np.ndarray = field(init=False, repr=False, compare=False)
    _indices: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_agents < 1:
            raise ValueError(f"graph needs at least one agent, got {self.num_agents}")
        object.__setattr__(self, "edges", frozenset((int(j), int(i)) for j, i in self.edges))
        incoming = [[] for _ in range(self.num_agents)]
        for j, i in self.edges:
            if not (0 <= j < self.num_agents and 0 <= i < self.num_agents):
                raise ValueError(f"edge ({j}, {i}) references an agent outside 0..{self.num_agents - 1}")
            incoming[i].append(j)
        for i, nbrs in enumerate(incoming):
            if not nbrs:
                raise ValueError(f"agent {i} has no in-neighbors; its average would be undefined")
            nbrs.sort()
        indptr = np.zeros(self.num_agents + 1, dtype=np.intp)
        indptr[1:] = np.cumsum([len(n) for n in incoming])
        indices = np.array([j for nbrs in incoming for j in nbrs], dtype=np.intp)
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "_indptr", indptr)
        object.__setattr__(self, "_indices", indices)

    def in_neighbors(self, i):
        """Sorted tuple of agents that ``i`` receives from (self included if looped)."""
        lo, hi = self._indptr[i], self._indptr[i + 1]
        return tuple(int(j) for j in self._indices[lo:hi])

    def out_neighbors(self, j):
        return tuple(sorted(i for src, i in self.edges if src == j))

    def to_dict(self):
        return {
            "num_agents": self.num_agents,
            "edges": sorted([list(e) for e in self.edges]),
        }


def is_strongly_connected(g: DirectedGraph) -> bool:
    """True iff every agent reaches every other along directed edges.

    One forward and one reverse breadth-first search from agent 0.
    """
    forward = [[] for _ in range(g.num_agents)]
    reverse = [[] for _ in range(g.num_agents)]
    for j, i in g.edges:
        forward[j].append(i)
        reverse[i].append(j)
    for adj in (forward, reverse):
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        if len(seen) != g.num_agents:
            return False
    return True


def fully_connected(n: int, include_self: bool = True) -> DirectedGraph:
    """Complete digraph on ``n`` agents, optionally with self-loops.

    With ``include_self`` each agent averages all N states with weight 1/N.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n == 1 and not include_self:
        raise ValueError("a single agent without a self-loop has no in-neighbors")
    edges = {(j, i) for j in range(n) for i in range(n) if include_self or i != j}
    return DirectedGraph(n, frozenset(edges))


def from_edges(num_agents: int, edges) -> DirectedGraph:
    return DirectedGraph(num_agents, frozenset(tuple(e) for e in edges))


def consensus_array(g: DirectedGraph, states: np.ndarray) -> np.ndarray:
    """Consensus step on an ``(N, n)`` state matrix; returns a fresh matrix."""
    states = np.ascontiguousarray(states, dtype=np.float64)
    if states.ndim != 2 or states.shape[0] != g.num_agents:
        raise ValueError(f"expected states of shape ({g.num_agents}, n), got {states.shape}")
    out = np.empty_like(states)
    core.consensus_csr(g._indptr, g._indices, states, out)
    add_flops(len(g._indices) * states.shape[1] + states.size, "consensus")
    return out


def consensus_step(g: DirectedGraph, states):
    """Replace each agent's state by the uniform mean over its in-neighbors.

    Args:
        g: Communication graph.
        states: One vector per agent, all of the same dimension.

    Returns:
        A new list of vectors; ``states`` is left untouched.

    Raises:
        ValueError: If the vectors differ in dimension or the count is not N.
    """
    vecs = [np.asarray(s, dtype=np.float64) for s in states]
    if len(vecs) != g.num_agents:
        raise ValueError(f"expected {g.num_agents} states, got {len(vecs)}")
    dims = {v.shape for v in vecs}
    if len(dims) != 1 or vecs[0].ndim != 1:
        raise ValueError(f"state vectors must share one 1-D shape, got {sorted(dims)}")
    out = consensus_array(g, np.stack(vecs))
    return [row.copy() for row in out]
