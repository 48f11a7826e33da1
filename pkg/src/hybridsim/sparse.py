"""0/1 node-by-hyperedge incidence matrices and sparse products."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .autograd import Tensor, _make


@dataclass(frozen=True)
class SparseIncidence:
    """Incidence matrix with ``rows`` nodes and ``cols`` hyperedges.

    ``entries`` is an (nnz, 2) int array of (row, col) coordinates, unique
    and sorted by row then column.
    """

    rows: int
    cols: int
    entries: np.ndarray = field(repr=False)

    @classmethod
    def from_pairs(cls, rows: int, cols: int, pairs) -> "SparseIncidence":
        arr = np.array(sorted(set((int(r), int(c)) for r, c in pairs)), dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr[:, 0].min() < 0 or arr[:, 0].max() >= rows
                         or arr[:, 1].min() < 0 or arr[:, 1].max() >= cols):
            raise ValueError("incidence coordinate out of range")
        return cls(rows, cols, arr)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SparseIncidence":
        dense = np.asarray(dense)
        r, c = np.nonzero(dense)
        return cls.from_pairs(dense.shape[0], dense.shape[1], zip(r, c))

    @property
    def nnz(self) -> int:
        return int(self.entries.shape[0])

    @cached_property
    def csr(self) -> sp.csr_matrix:
        data = np.ones(self.nnz)
        return sp.csr_matrix((data, (self.entries[:, 0], self.entries[:, 1])), shape=(self.rows, self.cols))

    @cached_property
    def csr_t(self) -> sp.csr_matrix:
        return self.csr.T.tocsr()

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        if self.nnz:
            out[self.entries[:, 0], self.entries[:, 1]] = 1.0
        return out

    def node_degrees(self) -> np.ndarray:
        return np.bincount(self.entries[:, 0], minlength=self.rows).astype(np.float64)

    def edge_degrees(self) -> np.ndarray:
        return np.bincount(self.entries[:, 1], minlength=self.cols).astype(np.float64)

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "entries": self.entries.tolist()}


def safe_inverse(deg: np.ndarray) -> np.ndarray:
    """Elementwise 1/deg with zero-degree entries mapped to 0."""
    deg = np.asarray(deg, dtype=np.float64)
    out = np.zeros_like(deg)
    np.divide(1.0, deg, out=out, where=deg != 0)
    return out


def spmm(h: SparseIncidence, x: Tensor, transpose: bool = False) -> Tensor:
    """``H @ x``, or ``H.T @ x`` when ``transpose`` is set."""
    expected = h.rows if transpose else h.cols
    if x.data.ndim != 2 or x.shape[0] != expected:
        raise ValueError(f"spmm shape mismatch: incidence {h.rows}x{h.cols}, x {x.shape}, transpose={transpose}")
    fwd, bwd = (h.csr_t, h.csr) if transpose else (h.csr, h.csr_t)
    out = np.asarray(fwd @ x.data)
    return _make(out, (x,), lambda g: (np.asarray(bwd @ g),))
