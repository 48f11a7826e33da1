"""Light hypergraph propagation with layer averaging and two-way attention fusion."""
from __future__ import annotations

import numpy as np

from .. import autograd as ag
from ..autograd import Tensor
from ..graphs import HeterogeneousHypergraph, HypergraphComponent
from ..sparse import spmm


def propagate(component: HypergraphComponent, x0: Tensor, layers: int) -> list[Tensor]:
    """Return ``[X^0, ..., X^L]`` with ``X^{l+1} = Dv^-1 H De^-1 H^T X^l``.

    No weights and no nonlinearity are applied between layers.
    """
    h = component.incidence
    dv = component.inv_node_degree[:, None]
    de = component.inv_edge_degree[:, None]
    out = [x0]
    x = x0
    for _ in range(layers):
        edge = ag.mul(spmm(h, x, transpose=True), de)
        x = ag.mul(spmm(h, edge), dv)
        out.append(x)
    return out


def layer_average(layers: list[Tensor]) -> Tensor:
    total = layers[0]
    for x in layers[1:]:
        total = ag.add(total, x)
    return ag.scale(total, 1.0 / len(layers))


def fusion_weights(x_uu: Tensor, x_ui: Tensor, a: Tensor, w_a: Tensor) -> Tensor:
    """Per-user softmax over the scores ``a . (W_a x)`` of the two components (M x 2)."""
    proj = ag.matmul(ag.transpose(w_a), a)
    scores = ag.concat([ag.matmul(x_uu, proj), ag.matmul(x_ui, proj)], axis=1)
    return ag.softmax(scores)


def attention_fuse(x_uu: Tensor, x_ui: Tensor, a: Tensor, w_a: Tensor) -> Tensor:
    alpha = fusion_weights(x_uu, x_ui, a, w_a)
    return ag.add(ag.mul(alpha[:, 0:1], x_uu), ag.mul(alpha[:, 1:2], x_ui))


def encode_global(graph: HeterogeneousHypergraph, x0: Tensor, a: Tensor, w_a: Tensor, layers: int) -> Tensor:
    x_uu = layer_average(propagate(graph.uu, x0, layers))
    x_ui = layer_average(propagate(graph.ui, x0, layers))
    return attention_fuse(x_uu, x_ui, a, w_a)


def dense_propagation_matrix(component: HypergraphComponent) -> np.ndarray:
    h = component.incidence.to_dense()
    return np.diag(component.inv_node_degree) @ h @ np.diag(component.inv_edge_degree) @ h.T
