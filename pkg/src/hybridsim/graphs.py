"""User index, interaction hypergraphs and the co-interaction projection."""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .data import Dataset
from .sparse import SparseIncidence, safe_inverse


class UserIndex:
    """Bijection between user ids and dense indices ``0..M-1``."""

    def __init__(self, user_ids: Iterable[str]):
        self.ids: list[str] = list(user_ids)
        self.pos: dict[str, int] = {u: i for i, u in enumerate(self.ids)}
        if len(self.pos) != len(self.ids):
            raise ValueError("duplicate user id in index")

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, user_id: str) -> int:
        return self.pos[user_id]

    def __contains__(self, user_id: str) -> bool:
        return user_id in self.pos

    def user(self, index: int) -> str:
        return self.ids[index]


@dataclass(frozen=True)
class HypergraphComponent:
    incidence: SparseIncidence
    inv_node_degree: np.ndarray
    inv_edge_degree: np.ndarray

    @classmethod
    def from_incidence(cls, h: SparseIncidence) -> "HypergraphComponent":
        return cls(h, safe_inverse(h.node_degrees()), safe_inverse(h.edge_degrees()))


@dataclass(frozen=True)
class HeterogeneousHypergraph:
    uu: HypergraphComponent
    ui: HypergraphComponent

    def to_json(self) -> dict:
        return {"uu": self.uu.incidence.to_json(), "ui": self.ui.incidence.to_json()}


# a cascade for graph purposes: (publisher, activated users)
CascadeMembers = tuple[str, list[str]]


def train_members(ds: Dataset, cascade_ids: Iterable[str]) -> list[CascadeMembers]:
    return [(ds.posts[pid].publisher_id, ds.responders(pid)) for pid in cascade_ids]


def build_ui_hypergraph(cascades: list[CascadeMembers], index: UserIndex) -> SparseIncidence:
    """One hyperedge per information item holding its publisher and activators."""
    pairs = []
    for e, (publisher, users) in enumerate(cascades):
        for u in {publisher, *users}:
            pairs.append((index[u], e))
    return SparseIncidence.from_pairs(len(index), len(cascades), pairs)


def build_uu_hypergraph(cascades: list[CascadeMembers], index: UserIndex) -> SparseIncidence:
    """One hyperedge per central user: the user plus everyone who engaged with their posts.

    Publishers whose posts drew no interactors get no hyperedge.
    """
    groups: dict[int, set[int]] = defaultdict(set)
    for publisher, users in cascades:
        p = index[publisher]
        groups[p].update(index[u] for u in users if u != publisher)
    centers = sorted(c for c, g in groups.items() if g)
    pairs = []
    for e, center in enumerate(centers):
        for u in groups[center] | {center}:
            pairs.append((u, e))
    return SparseIncidence.from_pairs(len(index), len(centers), pairs)


def build_hypergraph(cascades: list[CascadeMembers], index: UserIndex) -> HeterogeneousHypergraph:
    return HeterogeneousHypergraph(
        HypergraphComponent.from_incidence(build_uu_hypergraph(cascades, index)),
        HypergraphComponent.from_incidence(build_ui_hypergraph(cascades, index)),
    )


def projection_graph(cascades: list[CascadeMembers], index: UserIndex) -> dict[tuple[int, int], float]:
    """Weighted user-user graph: +1 per shared cascade and per publisher-interactor link."""
    w: dict[tuple[int, int], float] = defaultdict(float)
    for publisher, users in cascades:
        idx = sorted({index[u] for u in users if u != publisher})
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                w[(idx[a], idx[b])] += 1.0
        p = index[publisher]
        for u in idx:
            w[(min(p, u), max(p, u))] += 1.0
    return dict(sorted(w.items()))


def dump_debug(graph: HeterogeneousHypergraph, communities: list[int] | None, path: str | Path) -> None:
    payload = graph.to_json()
    if communities is not None:
        payload["communities"] = list(communities)
    Path(path).write_text(json.dumps(payload), encoding="utf-8")
