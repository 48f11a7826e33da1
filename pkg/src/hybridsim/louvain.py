"""Two-phase Louvain modularity optimisation on a weighted undirected graph."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

MIN_GAIN = 1e-9

Adjacency = list[dict[int, float]]


@dataclass(frozen=True)
class CommunityAssignment:
    labels: list[int]
    modularity: float

    @property
    def n_communities(self) -> int:
        return len(set(self.labels))

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for node, c in enumerate(self.labels):
            out[c].append(node)
        return dict(out)


def _adjacency(n: int, edges: dict[tuple[int, int], float]) -> Adjacency:
    # self-loop weight is stored doubled so row sums are node strengths
    adj: Adjacency = [defaultdict(float) for _ in range(n)]
    for (i, j), w in edges.items():
        if w == 0:
            continue
        if i == j:
            adj[i][i] += 2.0 * w
        else:
            adj[i][j] += w
            adj[j][i] += w
    return adj


def modularity(adj: Adjacency, labels) -> float:
    strength = np.array([sum(row.values()) for row in adj])
    two_m = strength.sum()
    if two_m == 0:
        return 0.0
    inside = 0.0
    tot: dict[int, float] = defaultdict(float)
    for i, row in enumerate(adj):
        tot[labels[i]] += strength[i]
        for j, w in row.items():
            if labels[i] == labels[j]:
                inside += w
    return inside / two_m - sum((t / two_m) ** 2 for t in tot.values())


def graph_modularity(n: int, edges: dict[tuple[int, int], float], labels) -> float:
    return modularity(_adjacency(n, edges), labels)


def _move_nodes(adj: Adjacency, order: list[int]) -> tuple[list[int], bool]:
    n = len(adj)
    strength = [sum(row.values()) for row in adj]
    two_m = sum(strength)
    comm = list(range(n))
    tot = list(strength)
    moved_any = False
    improved = True
    while improved:
        improved = False
        for i in order:
            ci = comm[i]
            ki = strength[i]
            links: dict[int, float] = defaultdict(float)
            for j, w in adj[i].items():
                if j != i:
                    links[comm[j]] += w
            tot[ci] -= ki
            best_c = ci
            best_gain = links.get(ci, 0.0) - tot[ci] * ki / two_m
            for c in sorted(links):
                gain = links[c] - tot[c] * ki / two_m
                if gain > best_gain + MIN_GAIN:
                    best_c, best_gain = c, gain
            tot[best_c] += ki
            if best_c != ci:
                comm[i] = best_c
                improved = moved_any = True
    return comm, moved_any


def _aggregate(adj: Adjacency, comm: list[int]) -> tuple[Adjacency, list[int]]:
    relabel = {c: k for k, c in enumerate(dict.fromkeys(comm))}
    labels = [relabel[c] for c in comm]
    agg: Adjacency = [defaultdict(float) for _ in range(len(relabel))]
    for i, row in enumerate(adj):
        for j, w in row.items():
            agg[labels[i]][labels[j]] += w
    return agg, labels


def louvain(n: int, edges: dict[tuple[int, int], float], seed: int | None = None) -> CommunityAssignment:
    """Detect communities among nodes ``0..n-1``.

    Nodes are visited in ascending index order; passing ``seed`` shuffles
    the visitation order reproducibly instead.
    """
    adj = _adjacency(n, edges)
    node_comm = list(range(n))
    if n == 0:
        return CommunityAssignment([], 0.0)
    rng = np.random.default_rng(seed) if seed is not None else None
    level = adj
    while True:
        order = list(range(len(level)))
        if rng is not None:
            order = [int(k) for k in rng.permutation(len(level))]
        if sum(sum(r.values()) for r in level) == 0:
            break
        comm, moved = _move_nodes(level, order)
        if not moved:
            break
        level, labels = _aggregate(level, comm)
        node_comm = [labels[c] for c in node_comm]
    relabel = {c: k for k, c in enumerate(dict.fromkeys(node_comm))}
    final = [relabel[c] for c in node_comm]
    return CommunityAssignment(final, modularity(adj, final))
