"""PNG/JPEG reading and PNG writing for images and region masks.

PNG inputs may be 8-bit RGB or RGBA (alpha is dropped); JPEG is read-only.
Masks are grayscale PNGs where value >= 128 marks a member pixel.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .colorspace import RgbImage
from .regions import RegionMask


def read_rgb(path_or_bytes) -> RgbImage:
    """Read a PNG or JPEG file (path, file object, or raw bytes) as RgbImage."""
    if isinstance(path_or_bytes, (bytes, bytearray)):
        path_or_bytes = io.BytesIO(path_or_bytes)
    with Image.open(path_or_bytes) as im:
        if im.format not in ("PNG", "JPEG"):
            raise ValueError(f"unsupported image format: {im.format}")
        rgb = im.convert("RGB")
        return RgbImage(np.asarray(rgb, dtype=np.uint8))


def write_png(img: RgbImage, path) -> None:
    """Write an RgbImage as an opaque 8-bit RGB PNG."""
    Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def encode_png(img: RgbImage) -> bytes:
    """Encode an RgbImage as PNG bytes."""
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def resize_rgb(img: RgbImage, width: int, height: int) -> RgbImage:
    """Area-average downscale (or upscale) to width x height."""
    out = Image.fromarray(img.pixels, mode="RGB").resize((width, height), Image.Resampling.BOX)
    return RgbImage(np.asarray(out, dtype=np.uint8))


def resize_mask(mask: RegionMask, width: int, height: int) -> RegionMask:
    """Nearest-neighbor resize of the membership grid."""
    raw = Image.fromarray(np.where(mask.member, 255, 0).astype(np.uint8), mode="L")
    out = raw.resize((width, height), Image.Resampling.NEAREST)
    return RegionMask(np.asarray(out, dtype=np.uint8) >= 128)


def read_mask(path) -> RegionMask:
    """Read a grayscale mask PNG; pixels with value >= 128 are members."""
    with Image.open(path) as im:
        gray = np.asarray(im.convert("L"), dtype=np.uint8)
    return RegionMask(gray >= 128)


def write_mask(mask: RegionMask, path) -> None:
    """Write a RegionMask as a 0/255 grayscale PNG."""
    gray = np.where(mask.member, 255, 0).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(path, format="PNG")
