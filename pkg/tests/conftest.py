"""Shared fixtures and image builders for the test suite."""

import numpy as np
import pytest

from chromaflow.colorspace import LabImage, RgbImage, rgb_to_lab
from chromaflow.pipeline import PipelineConfig, TransferJob
from chromaflow.regions import Correspondence, CorrespondenceSet, RegionMask


def quadrant_rgb(size):
    """Four-color quadrant image: red / green / blue / gray blocks."""
    px = np.zeros((size, size, 3), dtype=np.uint8)
    half = size // 2
    px[:half, :half] = (200, 40, 40)
    px[:half, half:] = (40, 180, 60)
    px[half:, :half] = (50, 70, 200)
    px[half:, half:] = (128, 128, 128)
    return RgbImage(px)


def noisy_rgb(height, width, base, seed, spread=3):
    """Solid color plus small uniform noise, clipped to 8-bit range."""
    rng = np.random.default_rng(seed)
    px = np.asarray(base, dtype=np.int64) + rng.integers(-spread, spread + 1, size=(height, width, 3))
    return RgbImage(np.clip(px, 0, 255).astype(np.uint8))


def gradient_rgb(height, width, seed=0):
    """Smooth two-axis gradient with mild noise; many distinct colors."""
    rng = np.random.default_rng(seed)
    y = np.linspace(0, 1, height)[:, None]
    x = np.linspace(0, 1, width)[None, :]
    r = 40 + 170 * x
    g = 60 + 150 * y
    b = 200 - 120 * x * y
    px = np.stack([r + 0 * y, g + 0 * x, b], axis=-1)
    px = px + rng.integers(-2, 3, size=(height, width, 3))
    return RgbImage(np.clip(px, 0, 255).astype(np.uint8))


def full_mask(width, height):
    return RegionMask(np.ones((height, width), dtype=bool))


def rect_mask(width, height, x0, y0, x1, y1):
    """Mask covering pixel columns [x0, x1) and rows [y0, y1)."""
    m = np.zeros((height, width), dtype=bool)
    m[y0:y1, x0:x1] = True
    return RegionMask(m)


def identity_job(img, config=None):
    """Transfer job whose single correspondence maps the image onto itself."""
    mask = full_mask(img.width, img.height)
    corr = Correspondence(mask, "self", mask)
    cs = CorrespondenceSet((corr,))
    return TransferJob(img, {"self": img}, cs, config or PipelineConfig())


def two_patch_job(size=64, seed=5, config=None, target_base=(60, 160, 80)):
    """Left/right split source; correspondence recolors the right half.

    Returns (job, left_mask, right_mask, target_image).
    """
    left = noisy_rgb(size, size // 2, (170, 60, 50), seed)
    right = noisy_rgb(size, size // 2, (60, 90, 170), seed + 1)
    px = np.concatenate([left.pixels, right.pixels], axis=1)
    src = RgbImage(px)
    tgt = noisy_rgb(size, size, target_base, seed + 2)

    right_mask = rect_mask(size, size, size // 2, 0, size, size)
    left_mask = rect_mask(size, size, 0, 0, size // 2, size)
    corr = Correspondence(right_mask, "t", full_mask(size, size))
    cs = CorrespondenceSet((corr,))
    job = TransferJob(src, {"t": tgt}, cs, config or PipelineConfig())
    return job, left_mask, right_mask, tgt


def distinct_color_rgb(height, width, seed=11):
    """Every pixel a distinct 24-bit color (requires h*w <= 2**24)."""
    rng = np.random.default_rng(seed)
    packed = rng.choice(1 << 24, size=height * width, replace=False)
    r = (packed >> 16) & 0xFF
    g = (packed >> 8) & 0xFF
    b = packed & 0xFF
    px = np.stack([r, g, b], axis=-1).reshape(height, width, 3).astype(np.uint8)
    return RgbImage(px)


def lab_of(rgb_img) -> LabImage:
    return rgb_to_lab(rgb_img)


@pytest.fixture
def quad64():
    return quadrant_rgb(64)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
