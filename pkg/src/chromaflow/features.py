"""Joint appearance/position feature vectors and exact k-nearest-neighbor search.

Each sample pixel becomes a 5-D point: its three lab channels plus its
normalized image coordinates scaled by a spatial weight.  Queries are exact:
results always equal a brute-force scan, with distance ties broken by the
lower pixel index.  Small point sets are scanned directly; larger ones go
through a kd-tree used only to find candidates, whose squared distances are
then recomputed from the raw features so tie handling is bit-identical to the
scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

BRUTE_FORCE_LIMIT = 64


@dataclass(frozen=True)
class FeaturePoint:
    feature: np.ndarray  # shape (5,)
    pixel_index: int


@dataclass
class FeatureSpace:
    """Immutable collection of feature points with an exact search index."""

    features: np.ndarray  # (n, 5)
    pixel_indices: np.ndarray  # (n,) int64, unique
    spatial_weight: float
    _tree: cKDTree | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.features) >= BRUTE_FORCE_LIMIT:
            self._tree = cKDTree(self.features)

    def __len__(self) -> int:
        return len(self.features)

    def point(self, row: int) -> FeaturePoint:
        return FeaturePoint(self.features[row], int(self.pixel_indices[row]))


def build_features(img, indices: np.ndarray, spatial_weight: float) -> FeatureSpace:
    """Build 5-D features (l, a, b, w*x/width, w*y/height) for `indices`.

    `indices` are row-major pixel indices into `img`; x is the column and y
    the row of each pixel, normalized by the image dimensions before applying
    the spatial weight.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0:
        raise ValueError("empty index set")
    if spatial_weight < 0:
        raise ValueError("spatial_weight must be nonnegative")
    colors = img.as_points()[indices]
    y, x = np.divmod(indices, img.width)
    feats = np.empty((len(indices), 5))
    feats[:, :3] = colors
    feats[:, 3] = spatial_weight * x / img.width
    feats[:, 4] = spatial_weight * y / img.height
    return FeatureSpace(feats, indices, float(spatial_weight))


def _rank_candidates(space: FeatureSpace, query_row: int, cand: np.ndarray, k: int):
    """Exact squared distances for `cand` rows, self dropped, tie-rule order."""
    q = space.features[query_row]
    diff = space.features[cand] - q
    d2 = (diff * diff).sum(axis=1)
    keep = cand != query_row
    cand, d2 = cand[keep], d2[keep]
    order = np.lexsort((space.pixel_indices[cand], d2))
    return cand[order][:k], d2[order][:k]


def _sorted_neighbors(space: FeatureSpace, query_row: int, k: int):
    n = len(space)
    if space._tree is None:
        return _rank_candidates(space, query_row, np.arange(n), k)
    m = min(n, k + 2)
    dist, rows = space._tree.query(space.features[query_row], k=m)
    dist, rows = np.atleast_1d(dist), np.atleast_1d(rows)
    cand, d2 = _rank_candidates(space, query_row, rows, k)
    if m < n and len(cand) == k and d2[-1] * (1 + 1e-9) + 1e-300 >= dist[-1] ** 2:
        # Points beyond the tree's m-th candidate could tie with the k-th
        # kept neighbor; widen to everything inside that radius.
        ball = np.asarray(
            space._tree.query_ball_point(space.features[query_row], dist[-1] * (1 + 1e-9) + 1e-150)
        )
        cand, d2 = _rank_candidates(space, query_row, ball, k)
    return cand, d2


def knn(space: FeatureSpace, query_index: int, k: int):
    """The k nearest other points, ascending distance, as (point, d2) pairs.

    `query_index` is a row into the space.  The query point itself is
    excluded; equidistant neighbors are ordered by lower pixel index.
    """
    n = len(space)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    rows, d2 = _sorted_neighbors(space, query_index, k)
    return [(space.point(r), float(d)) for r, d in zip(rows, d2)]


def knn_rows(space: FeatureSpace, k: int):
    """Neighbor rows and squared distances for every point, shape (n, k).

    Batched equivalent of calling knn() for each row; same tie rule.
    """
    n = len(space)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    out_rows = np.empty((n, k), dtype=np.int64)
    out_d2 = np.empty((n, k))
    if space._tree is None:
        for i in range(n):
            out_rows[i], out_d2[i] = _sorted_neighbors(space, i, k)
        return out_rows, out_d2

    m = min(n, k + 2)
    dist, rows = space._tree.query(space.features, k=m)
    gathered = space.features[rows] - space.features[:, None, :]
    d2 = (gathered * gathered).sum(axis=2)
    self_mask = rows == np.arange(n)[:, None]
    d2_masked = np.where(self_mask, np.inf, d2)
    pix = np.where(self_mask, np.iinfo(np.int64).max, space.pixel_indices[rows])
    for i in range(n):
        order = np.lexsort((pix[i], d2_masked[i]))[:k]
        kth = d2_masked[i][order[-1]]
        if m < n and kth * (1 + 1e-9) + 1e-300 >= dist[i, -1] ** 2:
            out_rows[i], out_d2[i] = _sorted_neighbors(space, i, k)
        else:
            out_rows[i] = rows[i][order]
            out_d2[i] = d2[i][order]
    return out_rows, out_d2
