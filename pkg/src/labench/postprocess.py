"""Binary mask clean-up: largest component, morphology, surface smoothing.

These mirror the post-processing column of the challenge methods table:
keep-largest-component, dilation/erosion, and smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grids import Mask

_CROSS6 = ndimage.generate_binary_structure(3, 1)
_CUBE26 = ndimage.generate_binary_structure(3, 3)


@dataclass(frozen=True)
class StructuringElement:
    """Footprint for morphology: a 6-connected cross or 26-connected cube.

    Radius r yields the L1 ball (iterated cross) or the Chebyshev ball
    ((2r+1)^3 cube) respectively.
    """

    kind: str = "cross"
    radius: int = 1

    def __post_init__(self):
        if self.kind not in ("cross", "cube"):
            raise ValueError(f"kind must be 'cross' or 'cube', got {self.kind!r}")
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")

    def footprint(self) -> np.ndarray:
        r = self.radius
        if self.kind == "cube":
            return np.ones((2 * r + 1,) * 3, dtype=bool)
        grid = np.abs(np.arange(-r, r + 1))
        manhattan = grid[:, None, None] + grid[None, :, None] + grid[None, None, :]
        return manhattan <= r


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return _CROSS6
    if connectivity == 26:
        return _CUBE26
    raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")


def largest_component(m: Mask, connectivity: int = 26) -> Mask:
    """Keep only the largest connected foreground component.

    Size ties are broken by the smallest minimum x-fastest linear index.
    An empty mask passes through unchanged.
    """
    structure = _structure(connectivity)
    if m.is_empty:
        return m
    labels, n = ndimage.label(m.bits, structure=structure)
    if n == 1:
        return m
    sizes = np.bincount(labels.ravel())[1:]  # skip background label 0
    best = int(np.argmax(sizes)) + 1
    tied = np.nonzero(sizes == sizes[best - 1])[0] + 1
    if tied.size > 1:
        # first nonzero occurrence in x-fastest order decides the tie
        flat = labels.transpose(2, 1, 0).ravel()
        first = {label: None for label in tied}
        remaining = len(first)
        for idx in np.nonzero(np.isin(flat, tied))[0]:
            label = int(flat[idx])
            if first[label] is None:
                first[label] = int(idx)
                remaining -= 1
                if remaining == 0:
                    break
        best = min(tied, key=lambda lab: first[int(lab)])
    return Mask(labels == best, m.spacing)


def dilate(m: Mask, se: StructuringElement = StructuringElement()) -> Mask:
    if m.is_empty:
        return m
    return Mask(ndimage.binary_dilation(m.bits, structure=se.footprint()), m.spacing)


def erode(m: Mask, se: StructuringElement = StructuringElement()) -> Mask:
    """Binary erosion; the grid border is treated as background."""
    if m.is_empty:
        return m
    return Mask(
        ndimage.binary_erosion(m.bits, structure=se.footprint(), border_value=0),
        m.spacing,
    )


def close_mask(m: Mask, se: StructuringElement = StructuringElement()) -> Mask:
    """Dilation followed by erosion, computed in a padded domain so the
    border convention cannot shave foreground off the grid edge
    (closing must be extensive)."""
    if m.is_empty:
        return m
    r = se.radius
    padded = np.pad(m.bits, r)
    padded = ndimage.binary_dilation(padded, structure=se.footprint())
    padded = ndimage.binary_erosion(padded, structure=se.footprint(), border_value=0)
    return Mask(padded[r:-r, r:-r, r:-r], m.spacing)


def open_mask(m: Mask, se: StructuringElement = StructuringElement()) -> Mask:
    return dilate(erode(m, se), se)


_NEIGHBOR_KERNEL = np.ones((3, 3, 3), dtype=np.uint8)
_NEIGHBOR_KERNEL[1, 1, 1] = 0


def smooth_surface(m: Mask, iterations: int = 1) -> Mask:
    """Majority-filter smoothing over the 26-neighborhood, iterated.

    A voxel becomes foreground when more than half of its 26 neighbors
    are, background when fewer than half are, and keeps its value on an
    exact 13-13 tie. Out-of-grid neighbors replicate the nearest edge
    voxel so flat regions touching the border are fixed points.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    bits = m.bits
    for _ in range(iterations):
        neighbors = ndimage.convolve(
            bits.astype(np.uint8), _NEIGHBOR_KERNEL, mode="nearest"
        )
        new = np.where(neighbors > 13, True, np.where(neighbors < 13, False, bits))
        if np.array_equal(new, bits):
            bits = new
            break
        bits = new
    return Mask(bits, m.spacing)
