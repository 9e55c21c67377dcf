"""Network topology, Metropolis combination weights and matrix-power ladders."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np


class TopologyError(ValueError):
    """Raised for malformed or disconnected topologies."""


# Fixed 10-node connected network shipped as the default experiment topology:
# a ring with four chords, every node has two or three neighbors.
DEFAULT_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (0, 9),
    (0, 5), (1, 7), (2, 8), (3, 6),
)


@dataclass(frozen=True)
class Topology:
    """Undirected connected graph over ``num_nodes`` nodes.

    Edges are stored as sorted pairs without self-loops; neighborhoods are
    self-inclusive.
    """

    num_nodes: int
    edges: frozenset[tuple[int, int]]
    neighborhoods: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_nodes < 1:
            raise TopologyError(f"num_nodes must be positive, got {self.num_nodes}")
        nbrs: list[set[int]] = [{k} for k in range(self.num_nodes)]
        for k, l in self.edges:
            nbrs[k].add(l)
            nbrs[l].add(k)
        object.__setattr__(self, "neighborhoods", tuple(frozenset(s) for s in nbrs))

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable[Iterable[int]]) -> "Topology":
        pairs = set()
        for edge in edges:
            k, l = (int(v) for v in edge)
            if k == l:
                raise TopologyError(f"self-loop ({k},{l}) is not allowed")
            for v in (k, l):
                if not 0 <= v < num_nodes:
                    raise TopologyError(f"edge ({k},{l}) references node {v} outside 0..{num_nodes - 1}")
            pairs.add((min(k, l), max(k, l)))
        topo = cls(num_nodes, frozenset(pairs))
        missing = topo.unreachable_nodes()
        if missing:
            raise TopologyError(f"graph is disconnected: node(s) {sorted(missing)} unreachable from node 0")
        return topo

    def unreachable_nodes(self) -> set[int]:
        seen = {0}
        stack = [0]
        while stack:
            k = stack.pop()
            for l in self.neighborhoods[k]:
                if l not in seen:
                    seen.add(l)
                    stack.append(l)
        return set(range(self.num_nodes)) - seen

    @property
    def degrees(self) -> np.ndarray:
        """Neighborhood sizes |N_k|, counting the node itself."""
        return np.array([len(n) for n in self.neighborhoods])

    def adjacency(self, self_loops: bool = True) -> np.ndarray:
        adj = np.zeros((self.num_nodes, self.num_nodes), dtype=bool)
        for k, l in self.edges:
            adj[k, l] = adj[l, k] = True
        if self_loops:
            np.fill_diagonal(adj, True)
        return adj

    def to_dict(self) -> dict:
        return {"num_nodes": self.num_nodes, "edges": [list(e) for e in sorted(self.edges)]}


def random_topology(num_nodes: int, edge_probability: float, seed: int, max_retries: int = 1000) -> Topology:
    """Seeded Erdos-Renyi graph, resampled until connected."""
    if not 0.0 <= edge_probability <= 1.0:
        raise TopologyError(f"edge_probability must lie in [0, 1], got {edge_probability}")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(num_nodes, k=1)
    for _ in range(max_retries):
        keep = rng.random(iu[0].size) < edge_probability
        edges = frozenset(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
        topo = Topology(num_nodes, edges)
        if not topo.unreachable_nodes():
            return topo
    raise TopologyError(
        f"no connected graph with K={num_nodes}, p={edge_probability} after {max_retries} draws (seed {seed})"
    )


def build_topology(spec: Mapping) -> Topology:
    """Build a topology from an explicit edge list or a seeded random request.

    ``spec`` holds ``num_nodes`` plus either ``edges`` (list of pairs) or
    ``edge_probability`` and ``seed``.
    """
    if "num_nodes" not in spec:
        raise TopologyError("topology spec needs 'num_nodes'")
    num_nodes = int(spec["num_nodes"])
    if "edges" in spec:
        return Topology.from_edges(num_nodes, spec["edges"])
    if "edge_probability" in spec:
        return random_topology(
            num_nodes,
            float(spec["edge_probability"]),
            int(spec.get("seed", 0)),
            int(spec.get("max_retries", 1000)),
        )
    raise TopologyError("topology spec needs either 'edges' or 'edge_probability'")


def default_topology() -> Topology:
    return Topology.from_edges(10, DEFAULT_EDGES)


def metropolis_weights(topo: Topology) -> np.ndarray:
    """Metropolis combination matrix: symmetric and doubly stochastic."""
    deg = topo.degrees
    A = np.zeros((topo.num_nodes, topo.num_nodes))
    for k, l in topo.edges:
        A[k, l] = A[l, k] = 1.0 / max(deg[k], deg[l])
    for k in range(topo.num_nodes):
        A[k, k] = 1.0 - sum(A[k, l] for l in sorted(topo.neighborhoods[k]) if l != k)
    return A


HOP_MASKS = ("none", "zero", "absorb")


@dataclass(frozen=True)
class PropagationWeights:
    """Stack of propagation matrices W(1)..W(L) derived from a combination matrix.

    ``matrices[p - 1]`` holds W(p), the weight a slot of age p carries from
    node l into node k's function. ``mask`` records how entries outside the
    one-hop neighborhoods were handled (see :func:`propagation_weights`).
    """

    max_power: int
    matrices: np.ndarray
    mask: str = "none"

    @property
    def masked(self) -> bool:
        return self.mask != "none"

    def __getitem__(self, p: int) -> np.ndarray:
        if not 1 <= p <= self.max_power:
            raise IndexError(f"power {p} outside 1..{self.max_power}")
        return self.matrices[p - 1]


def propagation_weights(A: np.ndarray, topo: Topology | None, max_power: int,
                        mask: str | bool = "none") -> PropagationWeights:
    """Build W(1)..W(max_power).

    mask="none"
        Exact powers, W(p) = A^p.
    mask="zero"
        A^p with entries outside the one-hop neighborhoods zeroed after the
        power is formed. Rows then sum to less than one and the implied
        filter is not a recursion; on non-complete graphs with smooth kernels
        it typically diverges for long buffers.
    mask="absorb"
        One-hop recursion W(p) = R(A W(p-1)), where R moves every entry
        outside node k's neighborhood onto the diagonal: weight that would
        land on a non-neighbor's step-i term goes to node k's own step-i
        term instead. Each node only ever uses its neighbors' data and rows
        stay stochastic.

    ``True``/``False`` are accepted as aliases of "zero"/"none".
    """
    if mask is True:
        mask = "zero"
    elif mask is False or mask is None:
        mask = "none"
    if mask not in HOP_MASKS:
        raise ValueError(f"unknown hop mask {mask!r}; expected one of {HOP_MASKS}")
    if max_power < 1:
        raise ValueError(f"max_power must be >= 1, got {max_power}")
    A = np.asarray(A, dtype=float)
    K = A.shape[0]
    if mask != "none" and topo is None:
        raise ValueError("hop masking needs the topology")
    support = topo.adjacency(self_loops=True) if topo is not None else np.ones((K, K), dtype=bool)

    powers = np.empty((max_power, K, K))
    powers[0] = A
    for p in range(1, max_power):
        nxt = A @ powers[p - 1]
        if mask == "absorb":
            spill = np.where(support, 0.0, nxt).sum(axis=1)
            nxt = np.where(support, nxt, 0.0)
            nxt[np.diag_indices(K)] += spill
        powers[p] = nxt
    if mask == "zero":
        powers = np.where(support[None, :, :], powers, 0.0)
    powers.setflags(write=False)
    return PropagationWeights(max_power, powers, mask)
