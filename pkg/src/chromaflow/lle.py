"""Affinely constrained reconstruction weights over feature-space neighbors.

Every sample point gets the sum-to-one weight vector that best rebuilds it
from its k nearest neighbors; stacking the rows yields the sparse
row-stochastic matrix W whose residual operator I - W drives the propagation
energy.  The per-row problem is solved through the local Gram system with a
trace-scaled ridge, the standard conditioning trick when the neighborhood is
rank-deficient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .features import FeatureSpace, knn_rows

# Ridge factors: heavy when k exceeds the feature dimension (singular Gram),
# vanishing otherwise.
RIDGE_WIDE = 1e-3
RIDGE_NARROW = 1e-9


@dataclass(frozen=True)
class LleRow:
    point_index: int
    neighbor_indices: np.ndarray  # (k,) rows into the sample set
    weights: np.ndarray  # (k,), sums to 1


@dataclass(frozen=True)
class LleGraph:
    """Sparse row-stochastic weight matrix over n sample points."""

    neighbor_rows: np.ndarray  # (n, k) int64
    weights: np.ndarray  # (n, k) float64, each row sums to 1

    def __post_init__(self):
        nbr, w = self.neighbor_rows, self.weights
        if nbr.ndim != 2 or w.shape != nbr.shape:
            raise ValueError("neighbor_rows and weights must share shape (n, k)")
        if np.abs(w.sum(axis=1) - 1.0).max() > 1e-8:
            raise ValueError("every weight row must sum to 1")
        own = np.arange(nbr.shape[0])[:, None]
        if (nbr == own).any():
            raise ValueError("a point may not neighbor itself")
        if nbr.shape[1] > 1:
            s = np.sort(nbr, axis=1)
            if (s[:, 1:] == s[:, :-1]).any():
                raise ValueError("neighbor indices must be distinct per row")

    @property
    def n(self) -> int:
        return self.neighbor_rows.shape[0]

    @property
    def k(self) -> int:
        return self.neighbor_rows.shape[1]

    def row(self, i: int) -> LleRow:
        return LleRow(i, self.neighbor_rows[i], self.weights[i])

    def to_sparse(self) -> sparse.csr_matrix:
        """W as CSR, shape (n, n)."""
        n, k = self.neighbor_rows.shape
        rows = np.repeat(np.arange(n), k)
        return sparse.csr_matrix(
            (self.weights.ravel(), (rows, self.neighbor_rows.ravel())), shape=(n, n)
        )

    def residual_operator(self) -> sparse.csr_matrix:
        """I - W as CSR."""
        return (sparse.identity(self.n, format="csr") - self.to_sparse()).tocsr()


def solve_weights(x: np.ndarray, neighbors: np.ndarray) -> np.ndarray:
    """Sum-to-one weights minimizing the reconstruction residual of `x`.

    Solves the local Gram system G w = 1 with G_jm = (x - x_j) . (x - x_m),
    ridged by delta * trace(G) * I, then normalizes to sum 1.  Weights may be
    negative.  A zero-trace Gram (all neighbors coincide with x) falls back to
    uniform weights.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(neighbors, dtype=np.float64) - x
    k, d = z.shape
    gram = z @ z.T
    tr = np.trace(gram)
    if tr == 0.0:
        return np.full(k, 1.0 / k)
    delta = RIDGE_WIDE if k > d else RIDGE_NARROW
    gram = gram + delta * tr * np.eye(k)
    w = np.linalg.solve(gram, np.ones(k))
    return w / w.sum()


def build_graph(space: FeatureSpace, k: int) -> LleGraph:
    """One weight row per sample point over its k nearest neighbors."""
    n = len(space)
    if not 1 <= k < n:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    rows, _ = knn_rows(space, k)
    z = space.features[rows] - space.features[:, None, :]  # (n, k, d)
    gram = z @ z.transpose(0, 2, 1)  # (n, k, k)
    tr = np.trace(gram, axis1=1, axis2=2)
    d = space.features.shape[1]
    delta = RIDGE_WIDE if k > d else RIDGE_NARROW
    ridge = delta * tr
    gram += ridge[:, None, None] * np.eye(k)
    degenerate = tr == 0.0
    if degenerate.any():
        gram[degenerate] = np.eye(k)
    w = np.linalg.solve(gram, np.ones((n, k, 1)))[:, :, 0]
    w /= w.sum(axis=1, keepdims=True)
    return LleGraph(rows, w)


def dump_weights(graph: LleGraph, fp) -> None:
    """Write W as coordinate-list text lines "row col weight"."""
    for i in range(graph.n):
        for j, w in zip(graph.neighbor_rows[i], graph.weights[i]):
            fp.write(f"{i} {int(j)} {float(w)!r}\n")
