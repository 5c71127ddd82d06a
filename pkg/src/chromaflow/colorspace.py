"""Conversion between 8-bit RGB images and decorrelated log-opponent lab images.

The working space is the Ruderman-style lab (l, alpha, beta): RGB is mapped
through a fixed LMS cone matrix, each cone response is log-compressed, and an
orthogonal-ish opponent rotation decorrelates the channels.  All arithmetic is
float64; lab images are stored planar so channel-wise solves get contiguous
vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Cone response matrix (Ruderman/Reinhard lineage).  Each row is normalized to
# sum exactly 1 so neutral grays (R=G=B) produce identical cone responses and
# therefore exactly zero opponent signal.
_RGB_TO_LMS_RAW = np.array([
    [0.3811, 0.5783, 0.0402],
    [0.1967, 0.7244, 0.0782],
    [0.0241, 0.1288, 0.8444],
])
RGB_TO_LMS = _RGB_TO_LMS_RAW / _RGB_TO_LMS_RAW.sum(axis=1, keepdims=True)
LMS_TO_RGB = np.linalg.inv(RGB_TO_LMS)

# Opponent decorrelation: scaled luminance / yellow-blue / red-green axes.
LMS_TO_LAB = np.diag([1.0 / np.sqrt(3.0), 1.0 / np.sqrt(6.0), 1.0 / np.sqrt(2.0)]) @ np.array([
    [1.0, 1.0, 1.0],
    [1.0, 1.0, -2.0],
    [1.0, -1.0, 0.0],
])
LAB_TO_LMS = np.linalg.inv(LMS_TO_LAB)

# Floor applied to cone responses before the log so black pixels stay finite.
LOG_FLOOR = 1e-6


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB image, pixels row-major with shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError("RgbImage pixels must have shape (height, width, 3)")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("RgbImage must be at least 1x1")
        if px.dtype != np.uint8:
            raise ValueError("RgbImage pixels must be uint8")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class LabImage:
    """Planar lab image: planes has shape (3, height, width), float64, finite."""

    planes: np.ndarray

    def __post_init__(self):
        pl = self.planes
        if pl.ndim != 3 or pl.shape[0] != 3:
            raise ValueError("LabImage planes must have shape (3, height, width)")
        if pl.shape[1] < 1 or pl.shape[2] < 1:
            raise ValueError("LabImage must be at least 1x1")
        if pl.dtype != np.float64:
            raise ValueError("LabImage planes must be float64")
        if not np.isfinite(pl).all():
            raise ValueError("LabImage planes must be finite")

    @property
    def width(self) -> int:
        return self.planes.shape[2]

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def pixel_count(self) -> int:
        return self.planes.shape[1] * self.planes.shape[2]

    def as_points(self) -> np.ndarray:
        """Colors as an (N, 3) row-major array; rows are (l, alpha, beta)."""
        return self.planes.reshape(3, -1).T


def rgb_to_lab(img: RgbImage) -> LabImage:
    """Convert an RGB image to the planar log-opponent lab space."""
    rgb = img.pixels.astype(np.float64) / 255.0
    lms = rgb.reshape(-1, 3) @ RGB_TO_LMS.T
    np.maximum(lms, LOG_FLOOR, out=lms)
    lab = np.log10(lms) @ LMS_TO_LAB.T
    planes = lab.T.reshape(3, img.height, img.width).copy()
    return LabImage(planes)


def lab_to_rgb(img: LabImage) -> RgbImage:
    """Invert rgb_to_lab, clamping out-of-gamut values into [0, 255]."""
    lab = img.as_points()
    lms = np.power(10.0, lab @ LAB_TO_LMS.T)
    rgb = lms @ LMS_TO_RGB.T
    np.clip(rgb, 0.0, 1.0, out=rgb)
    pixels = np.rint(rgb * 255.0).astype(np.uint8)
    return RgbImage(pixels.reshape(img.height, img.width, 3))


def lab_points_to_rgb(points: np.ndarray) -> np.ndarray:
    """Map (N, 3) lab rows to float RGB in [0, 1] (clamped, not quantized)."""
    lms = np.power(10.0, np.asarray(points, dtype=np.float64) @ LAB_TO_LMS.T)
    rgb = lms @ LMS_TO_RGB.T
    np.clip(rgb, 0.0, 1.0, out=rgb)
    return rgb
