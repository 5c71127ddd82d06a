"""Landmark sub-sampling of the color cloud with barycentric reconstruction.

Instead of solving the propagation system over every pixel, a seeded random
fraction of pixels becomes the landmark set.  The landmark colors are
triangulated in 3-D color space and every remaining pixel is written as the
barycentric combination of its containing tetrahedron, so a solution computed
on landmarks alone extends to the full image by linear interpolation.

Pixels whose color exactly equals a landmark color skip geometry entirely and
get an indicator assignment on that landmark; a constant-color image therefore
never needs a triangulation at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from .colorspace import LabImage
from .stats import ConstraintField

# Ambient dimension of the color cloud.
D = 3

# Deterministic symbolic-perturbation jitter: magnitude relative to the
# bounding-box diagonal, drawn from a fixed-seed stream so triangulations are
# a pure function of the input points.
JITTER_SCALE = 1e-7
JITTER_SEED = 0x7C3A9

# Barycentric coefficients of out-of-hull points are clipped here, then
# renormalized; interior assignments are never clipped.
EXTRAPOLATION_FLOOR = -0.05

# Relative singular-value cutoff deciding whether the cloud spans 3-D.
RANK_RTOL = 1e-9


class DegenerateColorCloud(ValueError):
    """All color points are affinely dependent; no 3-D triangulation exists."""


def _color_keys(points: np.ndarray) -> np.ndarray:
    """View (n, 3) float rows as a sortable structured array for exact match."""
    pts = np.ascontiguousarray(points, dtype=np.float64)
    dt = np.dtype([("l", np.float64), ("a", np.float64), ("b", np.float64)])
    return pts.view(dt).ravel()


def _first_rows_of_unique_colors(points: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Deduplicate `rows` by exact color, keeping the smallest row per color."""
    rows = np.sort(rows)
    _, first = np.unique(_color_keys(points[rows]), return_index=True)
    return np.sort(rows[first])


def select_landmarks(img: LabImage, beta: float, seed: int) -> np.ndarray:
    """Seeded landmark pixel indices: sample, dedup by color, add extremes.

    Draws round(beta*N) pixels without replacement, deduplicates by exact
    color equality, then appends the pixels extremal along each color axis and
    the two cloud diagonals so the landmark hull reaches every color.  The
    result is padded with further distinct colors up to D+2 points when the
    image has that many.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    pts = img.as_points()
    n = pts.shape[0]
    rng = np.random.default_rng(seed)
    size = int(round(beta * n))
    sampled = rng.choice(n, size=size, replace=False)
    eta = _first_rows_of_unique_colors(pts, sampled)

    diag = pts.sum(axis=1)
    extremes = []
    for axis in range(3):
        extremes.append(int(np.argmin(pts[:, axis])))
        extremes.append(int(np.argmax(pts[:, axis])))
    extremes.append(int(np.argmin(diag)))
    extremes.append(int(np.argmax(diag)))

    seen = {tuple(c) for c in pts[eta].tolist()}
    added = []
    for i in extremes:
        key = tuple(pts[i].tolist())
        if key not in seen:
            seen.add(key)
            added.append(i)
    if added:
        eta = np.sort(np.concatenate([eta, np.asarray(added, dtype=eta.dtype)]))

    if eta.size < D + 2:
        for i in np.sort(np.unique(_color_keys(pts), return_index=True)[1]):
            if eta.size >= D + 2:
                break
            key = tuple(pts[i].tolist())
            if key not in seen:
                seen.add(key)
                eta = np.sort(np.append(eta, i))
    return eta.astype(np.int64)


@dataclass(frozen=True)
class ColorTriangulation:
    """Delaunay tetrahedralization of landmark colors.

    Simplex location runs on jittered coordinates (general position), while
    barycentric coefficients are always solved against the raw coordinates.
    Simplices that are flat in raw coordinates are flagged unusable and only
    ever bypassed via the repair path.
    """

    points: np.ndarray  # (n, 3) raw colors
    jittered: np.ndarray  # (n, 3)
    simplices: np.ndarray  # (ns, 4) vertex rows
    origin: np.ndarray  # (ns, 3) first vertex of each simplex
    inverse: np.ndarray  # (ns, 3, 3) edge-matrix inverses, zero when unusable
    usable: np.ndarray  # (ns,) bool
    _delaunay: Delaunay
    _kdtree: cKDTree
    _incident_ptr: np.ndarray  # CSR over vertices -> incident simplex ids
    _incident_ids: np.ndarray

    @property
    def n_simplices(self) -> int:
        return self.simplices.shape[0]

    def find_simplex(self, points: np.ndarray) -> np.ndarray:
        return self._delaunay.find_simplex(np.asarray(points, dtype=np.float64))

    def nearest_vertex(self, point: np.ndarray) -> int:
        return int(self._kdtree.query(point)[1])

    def incident_simplices(self, vertex: int) -> np.ndarray:
        return self._incident_ids[self._incident_ptr[vertex]:self._incident_ptr[vertex + 1]]


def triangulate(points: np.ndarray, jitter_seed: int = JITTER_SEED) -> ColorTriangulation:
    """Delaunay-triangulate 3-D color points under deterministic jitter.

    Raises DegenerateColorCloud when the points are affinely dependent (their
    centered singular spectrum has relative rank < 3), in which case the
    caller falls back to solving on every distinct color.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != D:
        raise ValueError(f"expected (n, {D}) points, got {pts.shape}")
    if pts.shape[0] < D + 1:
        raise DegenerateColorCloud("degenerate color cloud")
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[0] == 0.0 or sv[D - 1] <= RANK_RTOL * sv[0]:
        raise DegenerateColorCloud("degenerate color cloud")

    span = np.linalg.norm(pts.max(axis=0) - pts.min(axis=0))
    rng = np.random.default_rng(jitter_seed)
    jittered = pts + (rng.random(pts.shape) * 2.0 - 1.0) * (JITTER_SCALE * span)
    try:
        delaunay = Delaunay(jittered)
    except QhullError as exc:
        raise DegenerateColorCloud("degenerate color cloud") from exc

    simplices = np.ascontiguousarray(delaunay.simplices, dtype=np.int32)
    origin = pts[simplices[:, 0]]
    # Edge matrix columns are v_i - v_0 in raw coordinates.
    edges = pts[simplices[:, 1:]] - origin[:, None, :]  # (ns, 3, 3) rows
    edges = edges.transpose(0, 2, 1)
    dets = np.linalg.det(edges)
    usable = np.isfinite(dets) & (dets != 0.0)
    inverse = np.zeros_like(edges)
    if usable.any():
        inverse[usable] = np.linalg.inv(edges[usable])

    verts = simplices.ravel()
    ids = np.repeat(np.arange(simplices.shape[0], dtype=np.int64), D + 1)
    order = np.argsort(verts, kind="stable")
    ptr = np.searchsorted(verts[order], np.arange(pts.shape[0] + 1))
    return ColorTriangulation(
        points=pts,
        jittered=jittered,
        simplices=simplices,
        origin=origin,
        inverse=inverse,
        usable=usable,
        _delaunay=delaunay,
        _kdtree=cKDTree(pts),
        _incident_ptr=ptr,
        _incident_ids=ids[order],
    )


def _coeffs_for_simplices(tri: ColorTriangulation, point: np.ndarray, sids: np.ndarray) -> np.ndarray:
    """Affine coordinates of one point w.r.t. several simplices, (len(sids), 4)."""
    d = point - tri.origin[sids]
    b = (tri.inverse[sids] @ d[:, :, None])[:, :, 0]
    return np.concatenate([(1.0 - b.sum(axis=1))[:, None], b], axis=1)


def _repair_assignment(tri: ColorTriangulation, point: np.ndarray) -> tuple[int, np.ndarray]:
    """Assign a point outside the hull (or in a flat simplex).

    Candidates are the usable simplices incident to the nearest landmark; the
    one whose smallest coefficient is largest wins, then coefficients are
    clipped at the extrapolation floor and renormalized.
    """
    cands = tri.incident_simplices(tri.nearest_vertex(point))
    cands = cands[tri.usable[cands]]
    if cands.size == 0:
        cands = np.flatnonzero(tri.usable)
    if cands.size == 0:
        raise DegenerateColorCloud("degenerate color cloud")
    coeffs = _coeffs_for_simplices(tri, point, cands)
    best = int(np.argmax(coeffs.min(axis=1)))
    clipped = np.maximum(coeffs[best], EXTRAPOLATION_FLOOR)
    return int(cands[best]), clipped / clipped.sum()


def assign_barycentric(point: np.ndarray, tri: ColorTriangulation) -> tuple[int, np.ndarray]:
    """Containing simplex id and its 4 barycentric coefficients for one point."""
    point = np.asarray(point, dtype=np.float64)
    sid = int(tri.find_simplex(point[None, :])[0])
    if sid < 0 or not tri.usable[sid]:
        return _repair_assignment(tri, point)
    coeffs = _coeffs_for_simplices(tri, point, np.asarray([sid]))[0]
    return sid, coeffs


def _assign_many(tri: ColorTriangulation, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized assign_barycentric over (m, 3) points."""
    m = points.shape[0]
    sids = tri.find_simplex(points).astype(np.int32)
    coeffs = np.zeros((m, D + 1))
    ok = (sids >= 0) & tri.usable[np.maximum(sids, 0)]
    if ok.any():
        s = sids[ok]
        d = points[ok] - tri.origin[s]
        b = (tri.inverse[s] @ d[:, :, None])[:, :, 0]
        coeffs[ok, 0] = 1.0 - b.sum(axis=1)
        coeffs[ok, 1:] = b
    for i in np.flatnonzero(~ok):
        sids[i], coeffs[i] = _repair_assignment(tri, points[i])
    return sids, coeffs


@dataclass(frozen=True)
class LandmarkSet:
    """Landmark indices plus a per-pixel barycentric assignment.

    Every pixel row of assign_vertices/assign_coeffs sums to 1: landmark
    pixels and exact color matches carry an indicator on their landmark
    (assign_simplex -1), all others carry the 4 vertices of their simplex.
    """

    eta: np.ndarray  # (n_l,) landmark pixel indices, ascending
    beta: float
    rng_seed: int
    colors: np.ndarray  # (n_l, 3) landmark colors, unique
    simplices: np.ndarray  # (ns, 4) landmark rows; empty when skipped
    assign_simplex: np.ndarray  # (N,) simplex id or -1 for exact match
    assign_vertices: np.ndarray  # (N, 4) landmark rows
    assign_coeffs: np.ndarray  # (N, 4)
    is_landmark: np.ndarray  # (N,) bool

    @property
    def n_landmarks(self) -> int:
        return self.eta.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.assign_coeffs.shape[0]

    @property
    def dimension(self) -> int:
        return D


def build_landmark_set(img: LabImage, beta: float, seed: int) -> LandmarkSet:
    """Select landmarks and assign every pixel of `img` to them.

    Raises DegenerateColorCloud when some pixel color is not a landmark color
    and the landmark cloud cannot be triangulated; callers retry with beta=1,
    which always succeeds because every distinct color becomes a landmark.
    """
    pts = img.as_points()
    n = pts.shape[0]
    eta = select_landmarks(img, beta, seed)
    colors = pts[eta]

    lkeys = _color_keys(colors)
    order = np.argsort(lkeys, kind="stable")
    pkeys = _color_keys(pts)
    pos = np.searchsorted(lkeys[order], pkeys)
    pos_c = np.minimum(pos, eta.size - 1)
    hit = lkeys[order][pos_c] == pkeys
    match = np.where(hit, order[pos_c], -1).astype(np.int64)

    assign_simplex = np.full(n, -1, dtype=np.int32)
    assign_vertices = np.zeros((n, D + 1), dtype=np.int64)
    assign_coeffs = np.zeros((n, D + 1))
    matched = match >= 0
    assign_vertices[matched] = match[matched][:, None]
    assign_coeffs[matched, 0] = 1.0

    if matched.all():
        simplices = np.zeros((0, D + 1), dtype=np.int32)
    else:
        tri = triangulate(colors)
        todo = ~matched
        sids, coeffs = _assign_many(tri, pts[todo])
        assign_simplex[todo] = sids
        assign_vertices[todo] = tri.simplices[sids]
        assign_coeffs[todo] = coeffs
        simplices = tri.simplices

    is_landmark = np.zeros(n, dtype=bool)
    is_landmark[eta] = True
    return LandmarkSet(
        eta=eta,
        beta=beta,
        rng_seed=seed,
        colors=colors,
        simplices=simplices,
        assign_simplex=assign_simplex,
        assign_vertices=assign_vertices,
        assign_coeffs=assign_coeffs,
        is_landmark=is_landmark,
    )


def reconstruct(values: np.ndarray, lset: LandmarkSet) -> np.ndarray:
    """Extend per-landmark values to all pixels via the stored coefficients.

    Anchored on the first vertex so constant landmark values reproduce exactly
    and landmark pixels copy their own value bit for bit.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape[0] != lset.n_landmarks:
        raise ValueError(f"expected {lset.n_landmarks} landmark values, got {vals.shape[0]}")
    gathered = vals[lset.assign_vertices]
    if vals.ndim == 1:
        deltas = gathered[:, 1:] - gathered[:, :1]
        return gathered[:, 0] + (deltas * lset.assign_coeffs[:, 1:]).sum(axis=1)
    deltas = gathered[:, 1:, :] - gathered[:, :1, :]
    return gathered[:, 0, :] + (deltas * lset.assign_coeffs[:, 1:, None]).sum(axis=1)


def redistribute_constraints(
    lset: LandmarkSet, field: ConstraintField, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """Push per-pixel constraints onto landmark vertices with their coefficients.

    A constrained pixel adds lam * coeff to each of its vertices' diagonal
    masses and lam * coeff * target to their right-hand sides; a constrained
    landmark pixel therefore contributes exactly (lam, lam * target) to
    itself.  Vertices left with non-positive mass (possible through negative
    extrapolation coefficients) are released: mass and rhs reset to 0.
    """
    if field.constrained.shape[0] != lset.n_pixels:
        raise ValueError("constraint field does not cover the pixel grid")
    n_l = lset.n_landmarks
    rows = lset.assign_vertices[field.constrained].ravel()
    wts = lam * lset.assign_coeffs[field.constrained].ravel()
    lambda_diag = np.bincount(rows, weights=wts, minlength=n_l)
    targets = field.targets[field.constrained]
    rhs = np.zeros((n_l, targets.shape[1]))
    for c in range(targets.shape[1]):
        per_vertex = wts * np.repeat(targets[:, c], D + 1)
        rhs[:, c] = np.bincount(rows, weights=per_vertex, minlength=n_l)
    released = lambda_diag <= 0.0
    lambda_diag[released] = 0.0
    rhs[released] = 0.0
    return lambda_diag, rhs
