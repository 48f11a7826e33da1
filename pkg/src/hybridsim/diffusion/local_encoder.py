"""Masked multi-head self-attention over the most recent activated users."""
from __future__ import annotations

import math

import numpy as np

from .. import autograd as ag
from ..autograd import NEG_INF, Tensor

PAD = -1


def build_causal_mask(n: int, valid: int) -> np.ndarray:
    """Additive mask: (t, s) is 0 when s <= t and s < valid, else -inf."""
    if valid > n:
        raise ValueError("valid length exceeds sequence length")
    t = np.arange(n)[:, None]
    s = np.arange(n)[None, :]
    return np.where((s <= t) & (s < valid), 0.0, NEG_INF)


def pad_sequences(seqs: list[list[int]], max_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Keep the last ``max_len`` users of each sequence and right-pad with PAD."""
    if any(len(s) == 0 for s in seqs):
        raise ValueError("empty sequence: seed with at least one user")
    trimmed = [list(s)[-max_len:] for s in seqs]
    width = max(len(s) for s in trimmed)
    idx = np.full((len(seqs), width), PAD, dtype=np.int64)
    for b, s in enumerate(trimmed):
        idx[b, : len(s)] = s
    return idx, np.array([len(s) for s in trimmed], dtype=np.int64)


def encode_sequence(
    index: np.ndarray,
    valid: np.ndarray,
    table: Tensor,
    positions: Tensor,
    wq: Tensor,
    wk: Tensor,
    wv: Tensor,
    w1: Tensor,
    b1: Tensor,
    w2: Tensor,
    b2: Tensor,
    heads: int,
) -> Tensor:
    """Encode a padded batch (B x n indices) into B x n x d outputs.

    Position t attends to valid positions <= t. Head outputs are
    concatenated and passed straight to the position-wise FFN.
    """
    bsz, n = index.shape
    if np.any(valid < 1):
        raise ValueError("empty sequence: seed with at least one user")
    if n > positions.shape[0]:
        raise ValueError(f"sequence length {n} exceeds positional table {positions.shape[0]}")
    d = table.shape[1]
    dh = d // heads
    x = ag.add(ag.gather_rows(table, index, pad=PAD), positions[:n])

    def split_heads(t: Tensor) -> Tensor:
        return ag.transpose(ag.reshape(t, (bsz, n, heads, dh)), (0, 2, 1, 3))

    q = split_heads(ag.matmul(x, wq))
    k = split_heads(ag.matmul(x, wk))
    v = split_heads(ag.matmul(x, wv))
    mask = np.stack([build_causal_mask(n, int(m)) for m in valid])[:, None]
    scores = ag.scale(ag.matmul(q, ag.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
    attn = ag.softmax(scores, mask)
    h = ag.reshape(ag.transpose(ag.matmul(attn, v), (0, 2, 1, 3)), (bsz, n, d))
    hidden = ag.relu(ag.add(ag.matmul(h, w1), b1))
    return ag.add(ag.matmul(hidden, w2), b2)
