"""Per-region channel statistics and the mean/std color transfer.

A masked region's per-channel mean and population standard deviation drive the
transfer: source-region pixels are standardized against the source stats and
rescaled to the target stats.  Accumulation uses exactly rounded summation
(math.fsum) in fixed row-major order, so results are bit-stable regardless of
how callers parallelize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .colorspace import LabImage
from .regions import CorrespondenceSet, RegionMask


@dataclass(frozen=True)
class RegionStats:
    """Channel-wise mean and population (divide-by-n) standard deviation."""

    mean: np.ndarray  # shape (3,)
    stddev: np.ndarray  # shape (3,); nonnegative

    def __post_init__(self):
        if self.mean.shape != (3,) or self.stddev.shape != (3,):
            raise ValueError("RegionStats mean/stddev must have shape (3,)")
        if (self.stddev < 0).any():
            raise ValueError("stddev must be nonnegative")


@dataclass(frozen=True)
class ConstraintField:
    """Per-pixel targets on the source image.

    constrained: (N,) boolean, row-major over source pixels.
    targets: (N, 3) float64; rows are meaningful exactly where constrained.
    """

    constrained: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        if self.constrained.ndim != 1 or self.constrained.dtype != np.bool_:
            raise ValueError("constrained must be a 1-D boolean array")
        if self.targets.shape != (self.constrained.shape[0], 3):
            raise ValueError("targets must have shape (N, 3)")
        if not np.isfinite(self.targets[self.constrained]).all():
            raise ValueError("constrained target values must be finite")


def _exact_mean_std(values: np.ndarray):
    """Two-pass population mean/std with exactly rounded sums."""
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / n
    return mean, math.sqrt(var)


def region_stats(img: LabImage, mask: RegionMask) -> RegionStats:
    """Channel statistics over the member pixels of `mask`."""
    if mask.width != img.width or mask.height != img.height:
        raise ValueError("dimension mismatch: mask does not match image")
    if mask.count == 0:
        raise ValueError("empty region: cannot compute statistics")
    mean = np.empty(3)
    std = np.empty(3)
    for c in range(3):
        mean[c], std[c] = _exact_mean_std(img.planes[c][mask.member])
    return RegionStats(mean, std)


def transfer_region(
    img: LabImage, r_s: RegionMask, stats_s: RegionStats, stats_t: RegionStats
) -> np.ndarray:
    """Recolored values for the member pixels of `r_s`, shape (count, 3).

    Each channel is shifted by the source mean, scaled by the std ratio, and
    recentered on the target mean.  A zero source std degenerates the ratio to
    0, so constant regions map onto the target mean.
    """
    if r_s.width != img.width or r_s.height != img.height:
        raise ValueError("dimension mismatch: mask does not match image")
    values = img.as_points()[r_s.member.ravel()]
    ratio = np.where(stats_s.stddev > 0, stats_t.stddev / np.where(stats_s.stddev > 0, stats_s.stddev, 1.0), 0.0)
    out = (values - stats_s.mean) * ratio + stats_t.mean
    # Equal stats mean the map is the identity; short-circuit per channel so
    # the result is bitwise unchanged instead of off by a rounding ulp.
    same = (stats_s.mean == stats_t.mean) & (stats_s.stddev == stats_t.stddev)
    if same.any():
        out[:, same] = values[:, same]
    return out


def build_constraints(img: LabImage, corr_set: CorrespondenceSet, targets: dict) -> ConstraintField:
    """Assemble the per-pixel constraint field from a validated set.

    Correspondence source regions receive transferred values; keep regions
    receive the pixel's original value.  `targets` maps target image id to its
    LabImage.
    """
    n = img.pixel_count
    constrained = np.zeros(n, dtype=bool)
    field = np.zeros((n, 3))
    points = img.as_points()

    for corr in corr_set.correspondences:
        stats_s = region_stats(img, corr.source_region)
        stats_t = region_stats(targets[corr.target_image_id], corr.target_region)
        flat = corr.source_region.member.ravel()
        field[flat] = transfer_region(img, corr.source_region, stats_s, stats_t)
        constrained |= flat
    for keep in corr_set.keep_regions:
        flat = keep.member.ravel()
        field[flat] = points[flat]
        constrained |= flat
    return ConstraintField(constrained, field)
