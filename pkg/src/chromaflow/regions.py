"""User-drawn regions: polygon rasterization and correspondence validation.

A freehand closed path becomes a boolean mask via the even-odd fill rule
evaluated at pixel centers.  Correspondences pair a source-image region with a
region on a named target image; keep regions pin source pixels to their
original colors.  Source and keep regions must be pairwise disjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RegionMask:
    """Boolean membership per pixel, row-major, shape (height, width)."""

    member: np.ndarray

    def __post_init__(self):
        m = self.member
        if m.ndim != 2 or m.dtype != np.bool_:
            raise ValueError("RegionMask member must be a 2-D boolean array")

    @property
    def width(self) -> int:
        return self.member.shape[1]

    @property
    def height(self) -> int:
        return self.member.shape[0]

    @property
    def count(self) -> int:
        return int(self.member.sum())


@dataclass(frozen=True)
class Correspondence:
    """A (source region, target image, target region) transfer directive."""

    source_region: RegionMask
    target_image_id: str
    target_region: RegionMask


@dataclass(frozen=True)
class CorrespondenceSet:
    correspondences: tuple
    keep_regions: tuple = field(default_factory=tuple)


def rasterize_closed_path(path, width: int, height: int) -> RegionMask:
    """Fill the implicitly closed polygon `path` on a width x height canvas.

    Membership is decided at pixel centers (x + 0.5, y + 0.5) under the
    even-odd rule.  Vertex coordinates are clamped into the canvas first.

    Raises:
        ValueError: fewer than 3 points, or the filled interior is empty.
    """
    pts = np.asarray(path, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("empty region")
    px = np.clip(pts[:, 0], 0.0, float(width))
    py = np.clip(pts[:, 1], 0.0, float(height))

    member = np.zeros((height, width), dtype=bool)
    # Pixel centers outside the polygon bounding box are never inside.
    x0 = max(int(np.floor(px.min() - 0.5)), 0)
    x1 = min(int(np.ceil(px.max() + 0.5)), width)
    y0 = max(int(np.floor(py.min() - 0.5)), 0)
    y1 = min(int(np.ceil(py.max() + 0.5)), height)
    if x0 >= x1 or y0 >= y1:
        raise ValueError("empty region")

    cx = np.arange(x0, x1, dtype=np.float64) + 0.5
    cy = np.arange(y0, y1, dtype=np.float64) + 0.5
    gx = cx[None, :]
    gy = cy[:, None]
    inside = np.zeros((y1 - y0, x1 - x0), dtype=bool)
    n = len(px)
    for a in range(n):
        b = (a + 1) % n
        ya, yb = py[a], py[b]
        if ya == yb:
            continue  # horizontal edges never cross a horizontal ray
        xa, xb = px[a], px[b]
        straddles = (ya > gy) != (yb > gy)
        xcross = xa + (gy - ya) * (xb - xa) / (yb - ya)
        inside ^= straddles & (gx < xcross)
    member[y0:y1, x0:x1] = inside

    if not member.any():
        raise ValueError("empty region")
    return RegionMask(member)


def point_in_polygon(x: float, y: float, path) -> bool:
    """Scalar even-odd test; reference oracle for rasterize_closed_path."""
    pts = [(float(p[0]), float(p[1])) for p in path]
    inside = False
    n = len(pts)
    for a in range(n):
        xa, ya = pts[a]
        xb, yb = pts[(a + 1) % n]
        if ya == yb:
            continue
        if (ya > y) != (yb > y) and x < xa + (y - ya) * (xb - xa) / (yb - ya):
            inside = not inside
    return inside


def validate_set(corr_set: CorrespondenceSet, source_dims, target_dims_by_id) -> CorrespondenceSet:
    """Check dimensions and disjointness; return the set unchanged if valid.

    source_dims and target dims are (width, height) tuples.

    Raises:
        ValueError: "dimension mismatch ..." naming the offending mask, or
            "overlapping regions ..." with the overlapping pixel count, or
            missing correspondences / empty masks.
    """
    if len(corr_set.correspondences) == 0:
        raise ValueError("correspondence set must contain at least one correspondence")
    sw, sh = source_dims

    def check_dims(mask: RegionMask, dims, name):
        w, h = dims
        if mask.width != w or mask.height != h:
            raise ValueError(
                f"dimension mismatch: {name} is {mask.width}x{mask.height}, image is {w}x{h}"
            )
        if mask.count == 0:
            raise ValueError(f"empty region: {name}")

    source_masks = []
    for i, corr in enumerate(corr_set.correspondences):
        check_dims(corr.source_region, (sw, sh), f"correspondence {i} source mask")
        if corr.target_image_id not in target_dims_by_id:
            raise ValueError(f"dimension mismatch: unknown target image '{corr.target_image_id}'")
        check_dims(
            corr.target_region,
            target_dims_by_id[corr.target_image_id],
            f"correspondence {i} target mask",
        )
        source_masks.append((f"correspondence {i} source mask", corr.source_region))
    for i, keep in enumerate(corr_set.keep_regions):
        check_dims(keep, (sw, sh), f"keep mask {i}")
        source_masks.append((f"keep mask {i}", keep))

    coverage = np.zeros((sh, sw), dtype=np.int32)
    for _, mask in source_masks:
        coverage += mask.member
    overlap = int((coverage > 1).sum())
    if overlap > 0:
        offenders = [
            name for name, mask in source_masks if (mask.member & (coverage > 1)).any()
        ]
        raise ValueError(
            f"overlapping regions: {overlap} pixels shared between " + ", ".join(offenders)
        )
    return corr_set
