"""Page preprocessing: global Otsu thresholding, binarization, denoising.

The default pipeline for a scanned page is grayscale -> Otsu binarize ->
Gaussian smoothing of the 0/1 raster, which yields a soft [0, 1] raster
that the filter bank consumes. The raw grayscale can be routed to the
filters instead (``gabor_input="gray"``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import GrayImage, _freeze

POLARITIES = ("auto", "dark-ink", "light-ink")
GABOR_INPUTS = ("smoothed-binary", "gray")


class DegenerateHistogramError(ValueError):
    """Raised when an image's histogram occupies a single gray level."""


@dataclass(frozen=True)
class BinaryImage:
    """Two-tone raster with labels in {0, 1}; 1 marks object (ink) pixels."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"BinaryImage needs a 2-D array, got shape {px.shape}")
        if px.max(initial=0) > 1:
            raise ValueError("BinaryImage labels must be 0 or 1")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_gray(self) -> GrayImage:
        return GrayImage(self.pixels.astype(np.float64))


@dataclass(frozen=True)
class PreprocessConfig:
    """Knobs for the page pipeline; defaults follow the CLI defaults."""

    denoise_sigma: float = 1.0
    denoise_radius: int = 3
    polarity: str = "auto"
    gabor_input: str = "smoothed-binary"

    def __post_init__(self):
        if self.polarity not in POLARITIES:
            raise ValueError(f"polarity must be one of {POLARITIES}")
        if self.gabor_input not in GABOR_INPUTS:
            raise ValueError(f"gabor_input must be one of {GABOR_INPUTS}")


def intensity_bins(img: GrayImage) -> np.ndarray:
    """8-bit gray levels: round(255 * intensity), halves rounding to even."""
    return np.rint(img.pixels * 255.0).astype(np.int64)


def otsu_threshold(img: GrayImage) -> int:
    """Global threshold maximizing between-class variance over 256 bins.

    Evaluates w0(t) * w1(t) * (mu0(t) - mu1(t))^2 for every t in [0, 255]
    (pixels with bin <= t form class 0) and returns the smallest maximizer.
    A single-level histogram has no split and raises
    DegenerateHistogramError.
    """
    hist = np.bincount(intensity_bins(img).ravel(), minlength=256).astype(np.int64)
    if np.count_nonzero(hist) < 2:
        raise DegenerateHistogramError(
            "histogram occupies a single gray level; no threshold separates two classes"
        )
    total = int(hist.sum())
    levels = np.arange(256, dtype=np.int64)
    weighted = levels * hist
    grand = int(weighted.sum())

    n0 = np.cumsum(hist)
    s0 = np.cumsum(weighted)
    n1 = total - n0
    valid = (n0 > 0) & (n1 > 0)

    sigma_b = np.zeros(256)
    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = n0 / total
        w1 = n1 / total
        mu0 = s0 / n0
        mu1 = (grand - s0) / n1
        candidate = w0 * w1 * (mu0 - mu1) ** 2
    sigma_b[valid] = candidate[valid]
    return int(np.argmax(sigma_b))


def binarize(img: GrayImage, t: int, polarity: str = "auto") -> BinaryImage:
    """Split an image into object (1) and background (0) at gray level t.

    Dark-ink polarity labels bins <= t as object; light-ink labels bins > t.
    Auto picks dark-ink when the page mean intensity exceeds 0.5 (light page,
    dark strokes).
    """
    if not 0 <= t <= 255:
        raise ValueError(f"threshold must be in [0, 255], got {t}")
    if polarity not in POLARITIES:
        raise ValueError(f"polarity must be one of {POLARITIES}")
    bins = intensity_bins(img)
    if polarity == "auto":
        polarity = "dark-ink" if img.pixels.mean() > 0.5 else "light-ink"
    labels = bins <= t if polarity == "dark-ink" else bins > t
    return BinaryImage(labels.astype(np.uint8))


def gaussian_smooth(
    img: GrayImage | BinaryImage, sigma: float = 1.0, radius: int = 3
) -> GrayImage:
    """Separable Gaussian blur with a truncated, normalized 1-D kernel.

    Kernel taps are exp(-i^2 / 2 sigma^2) for i in [-radius, radius],
    normalized to sum 1; borders replicate the edge pixel.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    if isinstance(img, BinaryImage):
        img = img.to_gray()
    taps = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(taps**2) / (2.0 * sigma**2))
    kernel /= kernel.sum()
    out = ndimage.correlate1d(img.pixels, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return GrayImage(np.clip(out, 0.0, 1.0))


def prepare_page(img: GrayImage, cfg: PreprocessConfig = PreprocessConfig()) -> GrayImage:
    """Run the page pipeline and return the raster the filter bank consumes.

    A page whose histogram is degenerate (blank scan) is treated as
    all-background rather than failing the batch.
    """
    if cfg.gabor_input == "gray":
        return img
    try:
        t = otsu_threshold(img)
        binary = binarize(img, t, cfg.polarity)
    except DegenerateHistogramError:
        binary = BinaryImage(np.zeros((img.height, img.width), dtype=np.uint8))
    return gaussian_smooth(binary, cfg.denoise_sigma, cfg.denoise_radius)
