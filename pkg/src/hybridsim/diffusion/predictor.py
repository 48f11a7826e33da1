"""Cascade pooling, gated fusion and masked user scoring."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autograd as ag
from ..autograd import NEG_INF, Tensor
from .local_encoder import PAD


def pool_global(global_x: Tensor, index: np.ndarray, valid: np.ndarray) -> Tensor:
    """Mean of the global rows of each prefix (B x d)."""
    if np.any(valid < 1):
        raise ValueError("empty prefix")
    rows = ag.gather_rows(global_x, index, pad=PAD)
    return ag.mul(ag.sum_(rows, axis=1), (1.0 / valid)[:, None])


def pool_local(outputs: Tensor, valid: np.ndarray, mode: str = "last") -> Tensor:
    """Encoder output at the last valid position, or the mean over valid positions."""
    if np.any(valid < 1):
        raise ValueError("empty prefix")
    if mode == "last":
        return ag.take_positions(outputs, valid - 1)
    if mode == "mean":
        n = outputs.shape[1]
        weights = (np.arange(n)[None, :] < valid[:, None]) / valid[:, None]
        return ag.sum_(ag.mul(outputs, weights[:, :, None]), axis=1)
    raise ValueError(f"unknown local pooling {mode!r}")


def gate_fuse(z_g: Tensor, z_l: Tensor, w: Tensor, eps: float = 1e-5) -> Tensor:
    """``gamma * z_g + (1 - gamma) * z_l`` with ``gamma = sigmoid([LN z_g; LN z_l] W)``."""
    gamma = ag.sigmoid(ag.matmul(ag.concat([ag.layer_norm(z_g, eps), ag.layer_norm(z_l, eps)], axis=-1), w))
    return ag.add(z_l, ag.mul(gamma, ag.sub(z_g, z_l)))


def activation_mask(activated: list[list[int]], m: int) -> np.ndarray:
    mask = np.zeros((len(activated), m))
    for b, users in enumerate(activated):
        mask[b, list(users)] = NEG_INF
    return mask


@dataclass
class ScoredRanking:
    scores: np.ndarray
    ranked: list[int]
    masked: np.ndarray

    def top_k(self, k: int) -> list[int]:
        return top_k(self, k)


def score_users(z: np.ndarray, table: np.ndarray, activated) -> ScoredRanking:
    """Dot-product scores; activated users get -inf and drop out of the ranking.

    Ties are broken by ascending user index.
    """
    scores = table @ np.asarray(z, dtype=np.float64)
    masked = np.zeros(scores.shape[0], dtype=bool)
    masked[list(activated)] = True
    scores = np.where(masked, NEG_INF, scores)
    idx = np.arange(scores.shape[0])
    order = np.lexsort((idx, -scores))
    ranked = [int(u) for u in order if not masked[u]]
    return ScoredRanking(scores, ranked, masked)


def top_k(ranking: ScoredRanking, k: int) -> list[int]:
    if k < 0:
        raise ValueError("k must be non-negative")
    return ranking.ranked[:k]
