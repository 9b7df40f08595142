"""Fixed-level quad-tree decomposition of a page into 4^l equal blocks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import GrayImage

MAX_LEVEL = 6


@dataclass(frozen=True)
class Block:
    """One quad-tree leaf: grid position (row, col) at a given level."""

    level: int
    row: int
    col: int
    pixels: GrayImage


@dataclass(frozen=True)
class PageDecomposition:
    """All 4^level blocks of one page, in row-major (row, col) order."""

    page_id: str
    level: int
    blocks: tuple[Block, ...]

    def block_at(self, row: int, col: int) -> Block:
        return self.blocks[row * 2**self.level + col]

    def reassemble(self) -> GrayImage:
        """Stitch the blocks back into the padded page."""
        n = 2**self.level
        rows = [
            np.hstack([self.block_at(r, c).pixels.pixels for c in range(n)])
            for r in range(n)
        ]
        return GrayImage(np.vstack(rows))


def pad_to_level(img: GrayImage, level: int) -> GrayImage:
    """Pad right/bottom with background 0.0 until 2^level divides both sides."""
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    n = 2**level
    new_h = -(-img.height // n) * n
    new_w = -(-img.width // n) * n
    if (new_h, new_w) == (img.height, img.width):
        return img
    out = np.zeros((new_h, new_w))
    out[: img.height, : img.width] = img.pixels
    return GrayImage(out)


def decompose(img: GrayImage, level: int, page_id: str = "") -> PageDecomposition:
    """Split a page into 4^level equal blocks after padding.

    Block (r, c) covers pixel rows [r*H/2^l, (r+1)*H/2^l) and the analogous
    columns of the padded page.
    """
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be in [0, {MAX_LEVEL}], got {level}")
    padded = pad_to_level(img, level)
    n = 2**level
    bh = padded.height // n
    bw = padded.width // n
    blocks = tuple(
        Block(level, r, c, GrayImage(padded.pixels[r * bh : (r + 1) * bh, c * bw : (c + 1) * bw]))
        for r in range(n)
        for c in range(n)
    )
    return PageDecomposition(page_id, level, blocks)


def foreground_ratio(block: Block, threshold: float) -> float:
    """Fraction of block pixels above the intensity threshold (object pixels)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    return float((block.pixels.pixels > threshold).mean())
