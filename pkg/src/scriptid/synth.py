"""Deterministic synthetic texture corpus: oriented square-wave gratings.

Each class is a stroke-like grating (dark bars on a light page) at its own
orientation and spatial frequency, chosen to line up with the filter
bank's sub-bands, plus optional additive Gaussian noise. The generator
stands in for scanned handwriting when no real corpus is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gabor import DEFAULT_ORIENTATION_STEP, wave_vector
from .raster import GrayImage, save_png


@dataclass(frozen=True)
class SynthClass:
    label: str
    orientation: float  # radians, direction of the wave vector
    frequency: float  # radians per pixel
    duty: float  # fraction of each period covered by the dark bar

    def __post_init__(self):
        if not 0.0 < self.duty < 1.0:
            raise ValueError(f"duty cycle must be in (0, 1), got {self.duty}")
        if self.frequency <= 0:
            raise ValueError(f"frequency must be positive, got {self.frequency}")


@dataclass(frozen=True)
class SynthSpec:
    classes: tuple[SynthClass, ...]
    page_size: tuple[int, int] = (256, 256)  # (width, height)
    pages_per_class: int = 10
    noise_level: float = 0.1
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise ValueError("spec needs at least one class")
        params = [(c.orientation, c.frequency) for c in self.classes]
        if len(set(params)) != len(params):
            raise ValueError("class (orientation, frequency) pairs must be distinct")
        w, h = self.page_size
        if w % 16 != 0 or h % 16 != 0:
            raise ValueError(f"page dimensions must be divisible by 16, got {w}x{h}")
        if not 0.0 <= self.noise_level <= 0.5:
            raise ValueError(f"noise_level must be in [0, 0.5], got {self.noise_level}")
        if self.pages_per_class < 1:
            raise ValueError("pages_per_class must be >= 1")


def gen_page(
    cls: SynthClass,
    page_size: tuple[int, int],
    noise_level: float,
    rng: np.random.Generator,
) -> GrayImage:
    """Render one grating page: ink (0.0) bars on background (1.0).

    The bar pattern repeats every 2*pi/frequency pixels along the class
    orientation; noise is added afterwards and the result clamps to [0, 1].
    """
    w, h = page_size
    rows, cols = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    phase = cls.frequency * (
        math.sin(cls.orientation) * rows + math.cos(cls.orientation) * cols
    )
    frac = (phase / (2.0 * math.pi)) % 1.0
    page = np.where(frac < cls.duty, 0.0, 1.0)
    if noise_level > 0:
        page = page + rng.normal(0.0, noise_level, page.shape)
    return GrayImage(np.clip(page, 0.0, 1.0))


def gen_corpus(spec: SynthSpec) -> list[tuple[str, str, GrayImage]]:
    """All pages as (page_id, label, image), class order then page index.

    Every page draws from its own generator seeded by (seed, class index,
    page index), so corpora are reproducible and pages independent.
    """
    corpus = []
    for ci, cls in enumerate(spec.classes):
        for pi in range(spec.pages_per_class):
            rng = np.random.default_rng([spec.seed, ci, pi])
            page = gen_page(cls, spec.page_size, spec.noise_level, rng)
            corpus.append((f"{cls.label}_{pi}", cls.label, page))
    return corpus


DEFAULT_DUTY = 0.3


def default_spec(
    n_classes: int = 6,
    pages_per_class: int = 10,
    noise_level: float = 0.1,
    seed: int = 42,
    page_size: tuple[int, int] = (256, 256),
) -> SynthSpec:
    """Standard corpus: bank orientations at scale 2, then at scale 4.

    Six classes cover the six orientations at the scale-2 frequency; classes
    7..12 repeat them at the scale-4 frequency, so an 11-class spec mirrors
    an eleven-script experiment structurally.
    """
    if not 1 <= n_classes <= 12:
        raise ValueError(f"n_classes must be in [1, 12], got {n_classes}")
    classes = []
    for i in range(n_classes):
        mu = i % 6
        nu = 2 if i < 6 else 4
        k, phi = wave_vector(nu, mu, DEFAULT_ORIENTATION_STEP)
        deg = round(math.degrees(phi))
        classes.append(SynthClass(f"o{deg:03d}v{nu}", phi, k, DEFAULT_DUTY))
    return SynthSpec(
        classes=tuple(classes),
        page_size=page_size,
        pages_per_class=pages_per_class,
        noise_level=noise_level,
        seed=seed,
    )


def write_corpus(spec: SynthSpec, out_dir: str | Path) -> list[Path]:
    """Write PNG pages as out/<label>/<label>_<i>.png (the ingestion layout)."""
    out_dir = Path(out_dir)
    written = []
    for page_id, label, image in gen_corpus(spec):
        class_dir = out_dir / label
        class_dir.mkdir(parents=True, exist_ok=True)
        path = class_dir / f"{page_id}.png"
        save_png(image, path)
        written.append(path)
    return written
