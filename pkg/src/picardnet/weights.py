"""Weight-matrix storage shared by every network operation.

A weight matrix is held either as a ``scipy.sparse.csr_array`` or as a
:class:`LowRank` product ``left @ right`` of two CSR factors.  The structural
shape (and hence the parameter count) is the same in both cases; the factored
form only exists because fusing a wide layer with a narrow one can produce a
product with millions of nonzeros whose information content is tiny.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "LowRank",
    "Weight",
    "as_weight",
    "block_diag",
    "matmul",
    "nnz",
    "scale_rows",
    "stages",
    "to_dense",
    "weight_shape",
]

# Products whose nonzero count stays below this are always materialized.
_MATERIALIZE_FLOOR = 4096


@dataclass(frozen=True)
class LowRank:
    """A weight matrix stored as the product ``left @ right``."""

    left: sp.csr_array
    right: sp.csr_array

    def __post_init__(self) -> None:
        if self.left.shape[1] != self.right.shape[0]:
            raise ValueError(
                f"factor shapes do not chain: {self.left.shape} @ {self.right.shape}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.left.shape[0]), int(self.right.shape[1]))


Weight = Union[sp.csr_array, LowRank]


def _csr(a) -> sp.csr_array:
    out = sp.csr_array(a, dtype=np.float64)
    out.sum_duplicates()
    return out


def as_weight(w) -> Weight:
    """Convert a dense array-like, a sparse matrix or a :class:`LowRank` to a weight."""
    if isinstance(w, LowRank):
        return w
    if sp.issparse(w):
        return _csr(w)
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"weight must be two-dimensional, got shape {arr.shape}")
    return _csr(arr)


def weight_shape(w: Weight) -> tuple[int, int]:
    return (int(w.shape[0]), int(w.shape[1]))


def nnz(w: Weight) -> int:
    """Stored nonzeros (summed over factors for a low-rank weight)."""
    if isinstance(w, LowRank):
        return int(w.left.nnz + w.right.nnz)
    return int(w.nnz)


def to_dense(w: Weight) -> np.ndarray:
    if isinstance(w, LowRank):
        return (w.left @ w.right).toarray()
    return w.toarray()


def stages(w: Weight) -> list[sp.csr_array]:
    """Linear stages applied in order when multiplying a vector by ``w``."""
    if isinstance(w, LowRank):
        return [w.right, w.left]
    return [w]


def _product_nnz_bound(a: sp.csr_array, b: sp.csr_array) -> int:
    """Upper bound on nnz(a @ b) from the sparsity patterns alone."""
    row_counts = np.diff(b.indptr).astype(np.float64)
    pattern = sp.csr_array((np.ones(a.nnz), a.indices, a.indptr), shape=a.shape)
    return int(np.minimum(pattern @ row_counts, b.shape[1]).sum())


def _fuse(a: sp.csr_array, b: sp.csr_array) -> Weight:
    """Return ``a @ b``, materialized unless that would blow up the storage."""
    bound = _product_nnz_bound(a, b)
    if bound <= max(_MATERIALIZE_FLOOR, 2 * (a.nnz + b.nnz)):
        return _csr(a @ b)
    return LowRank(a, b)


def matmul(a: Weight, b: Weight) -> Weight:
    """Matrix product of two weights."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")
    if isinstance(a, LowRank) and isinstance(b, LowRank):
        inner = _csr(a.right @ b.left)
        return _fuse(a.left, _csr(inner @ b.right))
    if isinstance(a, LowRank):
        return _fuse(a.left, _csr(a.right @ b))
    if isinstance(b, LowRank):
        return _fuse(_csr(a @ b.left), b.right)
    return _fuse(a, b)


def scale_rows(w: Weight, factors: np.ndarray) -> Weight:
    """Multiply row ``i`` of ``w`` by ``factors[i]``."""
    diag = sp.diags_array(np.asarray(factors, dtype=np.float64), format="csr")
    if isinstance(w, LowRank):
        return LowRank(_csr(diag @ w.left), w.right)
    return _csr(diag @ w)


def _as_lowrank(w: Weight) -> LowRank:
    if isinstance(w, LowRank):
        return w
    m, n = weight_shape(w)
    if n <= m:
        return LowRank(w, sp.identity(n, format="csr", dtype=np.float64))
    return LowRank(sp.identity(m, format="csr", dtype=np.float64), w)


def block_diag(ws: Sequence[Weight]) -> Weight:
    """Block-diagonal arrangement of the given weights."""
    if not ws:
        raise ValueError("block_diag needs at least one block")
    if not any(isinstance(w, LowRank) for w in ws):
        return _csr(sp.block_diag(list(ws), format="csr"))
    factored = [_as_lowrank(w) for w in ws]
    left = _csr(sp.block_diag([f.left for f in factored], format="csr"))
    right = _csr(sp.block_diag([f.right for f in factored], format="csr"))
    return LowRank(left, right)
