"""Energy/entropy features per sub-band and labeled dataset assembly.

Each block yields 60 features: for sub-band (nu, mu) at bank position
j = 6*(nu-1) + mu, feature 2j is the energy (mean squared response
magnitude) and feature 2j+1 the Shannon entropy of the normalized
squared-magnitude distribution, in bits.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import xlogy

from .gabor import FilterBank, SubbandResponse, bank_index, response_stack
from .preprocess import PreprocessConfig, prepare_page
from .quadtree import decompose, foreground_ratio
from .raster import GrayImage, _freeze

FEATURE_COUNT = 60

# header shared by the writer and readers: 5 metadata columns, then
# (energy, entropy) per sub-band in bank order
CSV_COLUMNS = ["label", "page_id", "level", "row", "col"] + [
    f"{kind}_v{nu}_o{mu}" for nu in range(1, 6) for mu in range(6) for kind in ("e", "h")
]
CSV_HEADER = ",".join(CSV_COLUMNS)


class MalformedCsvError(ValueError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def feature_index(nu: int, mu: int, kind: str = "energy") -> int:
    """Flat index of a sub-band's energy or entropy feature."""
    base = 2 * bank_index(nu, mu)
    if kind == "energy":
        return base
    if kind == "entropy":
        return base + 1
    raise ValueError(f"kind must be 'energy' or 'entropy', got {kind!r}")


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (FEATURE_COUNT,):
            raise ValueError(f"feature vector must have {FEATURE_COUNT} values")
        if not np.isfinite(vals).all() or (vals < 0).any():
            raise ValueError("features must be finite and non-negative")
        object.__setattr__(self, "values", _freeze(vals))

    def energy(self, nu: int, mu: int) -> float:
        return float(self.values[feature_index(nu, mu, "energy")])

    def entropy(self, nu: int, mu: int) -> float:
        return float(self.values[feature_index(nu, mu, "entropy")])


def unpack_features(fv: FeatureVector) -> dict[tuple[int, int], tuple[float, float]]:
    """Map (nu, mu) -> (energy, entropy)."""
    return {
        (nu, mu): (fv.energy(nu, mu), fv.entropy(nu, mu))
        for nu in range(1, 6)
        for mu in range(6)
    }


def pack_features(pairs: dict[tuple[int, int], tuple[float, float]]) -> FeatureVector:
    """Inverse of unpack_features."""
    vals = np.empty(FEATURE_COUNT)
    for (nu, mu), (e, h) in pairs.items():
        vals[feature_index(nu, mu, "energy")] = e
        vals[feature_index(nu, mu, "entropy")] = h
    return FeatureVector(vals)


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: str
    page_id: str
    level: int
    row: int
    col: int


@dataclass(frozen=True)
class Dataset:
    classes: tuple[str, ...]
    samples: tuple[LabeledSample, ...]

    def __post_init__(self):
        known = set(self.classes)
        for s in self.samples:
            if s.label not in known:
                raise ValueError(f"sample label {s.label!r} not in declared classes")

    def matrix(self) -> np.ndarray:
        """Stack features into an (n_samples, 60) array."""
        return np.array([s.features.values for s in self.samples])

    def labels(self) -> list[str]:
        return [s.label for s in self.samples]


def _energy(sq_mag: np.ndarray) -> float:
    return float(sq_mag.mean())


def _entropy(sq_mag: np.ndarray) -> float:
    total = sq_mag.sum()
    if total == 0.0:
        return 0.0
    p = sq_mag / total
    return float(-xlogy(p, p).sum() / np.log(2.0))


def energy(r: SubbandResponse) -> float:
    """Mean squared response magnitude: (1/P) * sum |J(x)|^2."""
    return _energy(np.abs(r.values) ** 2)


def entropy(r: SubbandResponse) -> float:
    """Shannon entropy (bits) of the normalized |J|^2 distribution.

    A zero response carries no distribution and scores 0.
    """
    return _entropy(np.abs(r.values) ** 2)


def extract_features(block: GrayImage, bank: FilterBank) -> FeatureVector:
    """Filter a block through the bank and pack (energy, entropy) pairs."""
    stack = response_stack(block, bank)
    vals = np.empty(FEATURE_COUNT)
    for j in range(len(bank.kernels)):
        sq_mag = np.abs(stack[j]) ** 2
        vals[2 * j] = _energy(sq_mag)
        vals[2 * j + 1] = _entropy(sq_mag)
    return FeatureVector(vals)


def extract_dataset(
    pages: Iterable[tuple[str, str, GrayImage]],
    level: int,
    bank: FilterBank,
    min_foreground: float = 0.0,
    pre: PreprocessConfig = PreprocessConfig(),
    foreground_threshold: float = 0.5,
) -> Dataset:
    """Run the whole pipeline over (page_id, label, image) triples.

    Pages are preprocessed, decomposed at the given level, optionally
    filtered by foreground ratio, and featurized. Sample order is
    deterministic: page order, then row-major blocks. Classes keep
    first-appearance order.
    """
    if not 1 <= level <= 6:
        raise ValueError(f"level must be in [1, 6], got {level}")
    classes: list[str] = []
    samples: list[LabeledSample] = []
    n_pages = 0
    for page_id, label, image in pages:
        n_pages += 1
        if label not in classes:
            classes.append(label)
        prepared = prepare_page(image, pre)
        for block in decompose(prepared, level, page_id).blocks:
            if min_foreground > 0.0 and foreground_ratio(block, foreground_threshold) < min_foreground:
                continue
            samples.append(
                LabeledSample(
                    extract_features(block.pixels, bank),
                    label,
                    page_id,
                    level,
                    block.row,
                    block.col,
                )
            )
    if n_pages == 0:
        raise ValueError("no pages supplied")
    if not samples:
        warnings.warn(
            f"min_foreground={min_foreground} filtered out every block", stacklevel=2
        )
    return Dataset(tuple(classes), tuple(samples))


def write_csv(ds: Dataset, path) -> None:
    """Write the feature table; floats use full-precision repr, LF endings."""
    lines = [CSV_HEADER]
    for s in ds.samples:
        cells = [s.label, s.page_id, str(s.level), str(s.row), str(s.col)]
        cells += [repr(float(v)) for v in s.features.values]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> Dataset:
    """Load a feature table; raises MalformedCsvError with the line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise MalformedCsvError(1, "missing or wrong header")
    classes: list[str] = []
    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(CSV_COLUMNS):
            raise MalformedCsvError(
                lineno, f"expected {len(CSV_COLUMNS)} columns, got {len(cells)}"
            )
        label, page_id = cells[0], cells[1]
        try:
            level, row, col = int(cells[2]), int(cells[3]), int(cells[4])
            values = np.array([float(c) for c in cells[5:]])
            fv = FeatureVector(values)
        except ValueError as exc:
            raise MalformedCsvError(lineno, str(exc)) from exc
        if label not in classes:
            classes.append(label)
        samples.append(LabeledSample(fv, label, page_id, level, row, col))
    return Dataset(tuple(classes), tuple(samples))
