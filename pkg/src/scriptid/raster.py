"""Image rasters: decoding, grayscale conversion, and simple encoders.

Images are light wrappers around read-only numpy arrays. ``GrayImage``
holds intensities as floats in [0, 1] because everything downstream
(filtering, feature math) is real-valued.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError


class UnsupportedFormatError(ValueError):
    """Raised for image files outside the supported 8-bit BMP/PNG set."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class RgbImage:
    """8-bit RGB raster, shape (height, width, 3), dtype uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"RgbImage needs a (H, W, 3) array, got shape {px.shape}")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class GrayImage:
    """Grayscale raster, shape (height, width), float64 intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"GrayImage needs a 2-D array, got shape {px.shape}")
        if not np.isfinite(px).all():
            raise ValueError("GrayImage intensities must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("GrayImage intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


_SUPPORTED_FORMATS = {"BMP", "PNG"}
# L = 8-bit gray, P = 8-bit palette (typical for 8-bit BMP), RGB = 24-bit.
_SUPPORTED_MODES = {"L", "P", "RGB"}


def load_image(path: str | Path) -> RgbImage:
    """Decode an 8-bit BMP or PNG file into an RgbImage.

    Grayscale files come back with r = g = b. Unreadable files raise OSError;
    anything outside 8-bit BMP/PNG raises UnsupportedFormatError.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            fmt = im.format
            if fmt not in _SUPPORTED_FORMATS:
                raise UnsupportedFormatError(
                    f"{path}: unsupported format {fmt!r} (only 8-bit BMP and PNG are accepted)"
                )
            if im.mode not in _SUPPORTED_MODES:
                raise UnsupportedFormatError(
                    f"{path}: unsupported {fmt} mode {im.mode!r} "
                    "(only 8-bit gray, palette, and RGB are accepted)"
                )
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"{path}: not a decodable image ({exc})") from exc
    return RgbImage(arr)


def to_grayscale(img: RgbImage) -> GrayImage:
    """Convert RGB to gray with BT.601 luma (0.299, 0.587, 0.114).

    Integer-weighted arithmetic keeps gray triples (v, v, v) mapping to
    exactly v/255.
    """
    ch = img.pixels.astype(np.int64)
    luma = (299 * ch[..., 0] + 587 * ch[..., 1] + 114 * ch[..., 2]) / 255000.0
    return GrayImage(np.clip(luma, 0.0, 1.0))


def quantize(img: GrayImage) -> np.ndarray:
    """Round intensities to 8-bit levels (uint8)."""
    return np.rint(img.pixels * 255.0).astype(np.uint8)


def save_png(img: GrayImage | RgbImage, path: str | Path) -> None:
    """Write an image as PNG (grayscale images are quantized to 8 bits)."""
    if isinstance(img, GrayImage):
        Image.fromarray(quantize(img), mode="L").save(path, format="PNG")
    else:
        Image.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def save_pgm(values: np.ndarray, path: str | Path) -> None:
    """Write a uint8 2-D array as a binary (P5) PGM file."""
    arr = np.asarray(values, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError("PGM output needs a 2-D array")
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + arr.tobytes())
