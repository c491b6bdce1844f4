"""Two-stage localize -> crop -> segment -> pad-back pipeline geometry.

The winning challenge pipelines detect the cavity centroid, crop a fixed
240x160x96 region around it, segment inside the crop, and pad the result
back to the scan resolution. Here the two CNNs are replaced by pluggable
``Localizer`` and ``Segmenter`` callables so the geometry (and the offset
and patch-size experiments that probe it) can be exercised without any
trained model: localizers include threshold-centroid, truth-centroid
(oracle) and fixed-center; segmenters include the truth oracle, an
Otsu-threshold pipeline and an adapter over externally produced
prediction files.

Segmenters are called as ``segment(patch, box)``: the ROI box is the
patch's provenance and is what lets the oracle and the external adapter
align their output with the crop placement.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import BoxInconsistent, EmptyMask, NoForeground
from .grids import Grid, Mask, Volume, VoxelIndex, check_same_geometry
from .metrics import dice
from .nrrd_io import read_nrrd
from .postprocess import StructuringElement, close_mask, largest_component

DEFAULT_ROI_SIZE = (240, 160, 96)

_AXES = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class RoiBox:
    """Axis-aligned crop placement; origin may lie outside the volume
    when the crop was zero-padded."""

    origin: tuple[int, int, int]
    size: tuple[int, int, int]

    def __post_init__(self):
        if min(self.size) < 1:
            raise ValueError(f"box size must be positive, got {self.size!r}")


def crop_box(grid: Grid, box: RoiBox) -> Grid:
    """Extract the box from a volume or mask, zero-padding out-of-bounds parts."""
    if isinstance(grid, Mask):
        src = grid.bits
        patch = np.zeros(box.size, dtype=bool)
    else:
        src = grid.data
        patch = np.zeros(box.size, dtype=src.dtype)
    src_sl, dst_sl = [], []
    for o, w, n in zip(box.origin, box.size, grid.dims):
        lo = max(0, o)
        hi = min(n, o + w)
        if lo >= hi:
            src_sl = None
            break
        src_sl.append(slice(lo, hi))
        dst_sl.append(slice(lo - o, hi - o))
    if src_sl is not None:
        patch[tuple(dst_sl)] = src[tuple(src_sl)]
    if isinstance(grid, Mask):
        return Mask(patch, grid.spacing)
    return Volume(patch, grid.spacing)


def crop(grid: Grid, center: VoxelIndex, size: tuple[int, int, int]) -> tuple[Grid, RoiBox]:
    """Crop a box of the given size centered on a voxel.

    The origin is ``center - size//2`` per axis; parts of the box outside
    the volume are zero-padded, and the returned RoiBox records the
    placement so :func:`uncrop` can invert the operation exactly.
    """
    origin = tuple(int(c) - int(w) // 2 for c, w in zip(center, size))
    box = RoiBox(origin=origin, size=tuple(int(w) for w in size))
    return crop_box(grid, box), box


def uncrop(patch: Mask, box: RoiBox, full_dims: tuple[int, int, int]) -> Mask:
    """Place a mask patch back at its recorded box inside a full-size grid.

    Voxels of the patch that fall outside the full grid (the zero-padded
    part of a boundary crop) are discarded; everything else is background.
    """
    if patch.dims != box.size:
        raise BoxInconsistent(f"patch dims {patch.dims} != box size {box.size}")
    full = np.zeros(full_dims, dtype=bool)
    src_sl, dst_sl = [], []
    for o, w, n in zip(box.origin, box.size, full_dims):
        lo = max(0, o)
        hi = min(n, o + w)
        if lo >= hi:
            src_sl = None
            break
        dst_sl.append(slice(lo, hi))
        src_sl.append(slice(lo - o, hi - o))
    if src_sl is not None:
        full[tuple(dst_sl)] = patch.bits[tuple(src_sl)]
    return Mask(full, patch.spacing)


# --- localizers -------------------------------------------------------------


def otsu_threshold(data: np.ndarray, bins: int = 256) -> float:
    """Otsu's threshold (maximal between-class variance) over 256 bins."""
    flat = data.ravel().astype(np.float64)
    lo, hi = float(flat.min()), float(flat.max())
    if hi <= lo:
        raise NoForeground("constant volume has no separable foreground")
    hist, edges = np.histogram(flat, bins=bins, range=(lo, hi))
    p = hist.astype(np.float64) / flat.size
    omega = np.cumsum(p)
    mu = np.cumsum(p * (edges[:-1] + edges[1:]) / 2.0)
    mu_t = mu[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        sigma_b = (mu_t * omega - mu) ** 2 / (omega * (1.0 - omega))
    sigma_b[~np.isfinite(sigma_b)] = 0.0
    k = int(np.argmax(sigma_b))
    return float(edges[k + 1])


def centroid_index(bits: np.ndarray) -> VoxelIndex:
    """Foreground centroid rounded half-up to a voxel index."""
    coords = np.nonzero(bits)
    return tuple(int(np.floor(c.mean() + 0.5)) for c in coords)


def localize_oracle(truth: Mask) -> VoxelIndex:
    if truth.is_empty:
        raise EmptyMask("cannot localize an empty truth mask")
    return centroid_index(truth.bits)


_CUBE26 = ndimage.generate_binary_structure(3, 3)


def localize_threshold(v: Volume, downsample_factor: int = 4) -> VoxelIndex:
    """Centroid of the largest bright component of a downsampled scan.

    Otsu-thresholds the downsampled volume, keeps the largest
    26-connected bright component, and maps its centroid back to full
    resolution (block centers), clamped to the volume bounds.
    """
    from .grids import downsample  # local import avoids a cycle at module load

    f = int(downsample_factor)
    if f < 1:
        raise ValueError(f"downsample factor must be >= 1, got {downsample_factor}")
    f = min(f, *v.dims)
    small = downsample(v, (f, f, f))
    threshold = otsu_threshold(small.data)
    bright = small.data > threshold
    if not bright.any():
        raise NoForeground("thresholding produced an empty foreground")
    labels, n = ndimage.label(bright, structure=_CUBE26)
    sizes = np.bincount(labels.ravel())[1:]
    bright = labels == (int(np.argmax(sizes)) + 1)
    cx, cy, cz = (float(c.mean()) for c in np.nonzero(bright))
    # block centers: downsampled index c covers full-res [c*f, c*f + f)
    return tuple(
        int(np.clip(np.floor((c + 0.5) * f), 0, dim - 1))
        for c, dim in zip((cx, cy, cz), v.dims)
    )


class OracleLocalizer:
    """Centroid of the ground-truth mask (test fixture)."""

    label = "oracle"

    def __init__(self, truth: Mask):
        self.truth = truth

    def __call__(self, v: Volume) -> VoxelIndex:
        return localize_oracle(self.truth)


class ThresholdLocalizer:
    label = "threshold"

    def __init__(self, downsample_factor: int = 4):
        self.downsample_factor = downsample_factor

    def __call__(self, v: Volume) -> VoxelIndex:
        return localize_threshold(v, self.downsample_factor)


class FixedCenterLocalizer:
    label = "fixed-center"

    def __call__(self, v: Volume) -> VoxelIndex:
        return tuple(n // 2 for n in v.dims)


# --- segmenters -------------------------------------------------------------


class OracleSegmenter:
    """Returns the ground truth restricted to the patch box."""

    label = "oracle"

    def __init__(self, truth: Mask):
        self.truth = truth

    def __call__(self, patch: Volume, box: RoiBox) -> Mask:
        return crop_box(self.truth, box)


class ThresholdSegmenter:
    """Otsu threshold, largest 26-component, then morphological closing.

    ``smooth_sigma`` optionally Gaussian-filters the patch first; leave it
    at 0 for bit-exact behavior on noiseless data, raise it (~1-2 voxels)
    to get graceful instead of catastrophic degradation under voxel noise.
    """

    label = "threshold"

    def __init__(self, closing_radius: int = 1, smooth_sigma: float = 0.0):
        self.closing_radius = closing_radius
        self.smooth_sigma = smooth_sigma

    def __call__(self, patch: Volume, box: RoiBox) -> Mask:
        data = patch.data
        if self.smooth_sigma > 0.0:
            data = ndimage.gaussian_filter(data.astype(np.float64), self.smooth_sigma)
        try:
            threshold = otsu_threshold(data)
        except NoForeground:
            return Mask(np.zeros(patch.dims, dtype=bool), patch.spacing)
        mask = Mask(data > threshold, patch.spacing)
        mask = largest_component(mask, connectivity=26)
        if self.closing_radius > 0 and not mask.is_empty:
            mask = close_mask(mask, StructuringElement("cross", self.closing_radius))
        return mask


class ExternalPredictionSegmenter:
    """Adapter over a directory of per-case NRRD prediction masks.

    The directory holds one full-resolution ``<case_id>.nrrd`` mask per
    case; segmenting a patch crops that mask with the patch's box, so
    external model outputs flow through the same pipeline harness.
    """

    def __init__(self, directory, case_id: str):
        self.directory = Path(directory)
        self.case_id = case_id
        self.label = f"external:{case_id}"

    def __call__(self, patch: Volume, box: RoiBox) -> Mask:
        full = read_nrrd(self.directory / f"{self.case_id}.nrrd", as_mask=True)
        return crop_box(full, box)


# --- pipeline and experiments ------------------------------------------------


def run_pipeline(v: Volume, localizer, segmenter, roi_size=DEFAULT_ROI_SIZE) -> Mask:
    """localize -> crop -> segment -> pad back to the input geometry."""
    center = localizer(v)
    patch, box = crop(v, center, roi_size)
    pred_patch = segmenter(patch, box)
    return uncrop(pred_patch, box, v.dims)


def max_noloss_displacement(truth: Mask, roi_size, axis: int = 0) -> int:
    """Largest positive crop-center displacement (voxels) along an axis
    that keeps every foreground voxel inside the box.

    This is the sweep's 100% point: the mask is pressed against the box
    side without losing any voxels.
    """
    c = localize_oracle(truth)[axis]
    w = roi_size[axis]
    occupied = np.nonzero(truth.bits.any(axis=tuple(i for i in range(3) if i != axis)))[0]
    lo, hi = int(occupied[0]), int(occupied[-1])
    d_max = lo - c + w // 2           # box start must stay at or below the mask start
    d_min = hi - c - (w - w // 2 - 1)  # box end must stay at or above the mask end
    if d_max < max(0, d_min):
        raise ValueError(f"roi size {roi_size!r} cannot hold the mask along axis {axis}")
    return d_max


def offset_sweep(
    v: Volume,
    truth: Mask,
    segmenter,
    roi_size=DEFAULT_ROI_SIZE,
    offsets=(0, 25, 50, 75, 100, 125, 150),
    axis: int | str = "x",
) -> list[tuple[float, float]]:
    """Dice as the crop center is displaced away from the cavity centroid.

    Each offset is a percentage of the maximal no-loss displacement along
    the chosen axis; 100% presses the cavity against the box side without
    voxel loss, and larger offsets start cutting it.
    """
    check_same_geometry(v, truth)
    if truth.is_empty:
        raise EmptyMask("offset sweep needs a non-empty truth mask")
    ax = _AXES.get(axis, axis) if isinstance(axis, str) else int(axis)
    center = localize_oracle(truth)
    d100 = max_noloss_displacement(truth, roi_size, ax)
    curve = []
    for pct in offsets:
        if pct < 0:
            raise ValueError(f"offsets must be non-negative, got {pct}")
        d = int(np.floor(pct / 100.0 * d100 + 0.5))
        shifted = tuple(c + (d if i == ax else 0) for i, c in enumerate(center))
        patch, box = crop(v, shifted, roi_size)
        pred = uncrop(segmenter(patch, box), box, v.dims)
        curve.append((float(pct), dice(pred, truth)))
    return curve


def patch_size_sweep(
    v: Volume,
    truth: Mask,
    sizes,
    z_extent: int = 96,
) -> list[tuple[int, int, float, float]]:
    """Background share and cavity containment across candidate xy patch sizes.

    Boxes are centered on the truth centroid with a fixed z extent.
    Returns (wx, wy, background_pct, containment_pct) per size, where
    background_pct is over the whole box (padding included) and
    containment_pct is the share of truth foreground inside the box.
    """
    check_same_geometry(v, truth)
    if truth.is_empty:
        raise EmptyMask("patch-size sweep needs a non-empty truth mask")
    center = localize_oracle(truth)
    total_fg = truth.count
    rows = []
    for wx, wy in sizes:
        size = (int(wx), int(wy), int(z_extent))
        patch, _ = crop(truth, center, size)
        inside = patch.count
        box_voxels = size[0] * size[1] * size[2]
        rows.append(
            (
                size[0],
                size[1],
                100.0 * (1.0 - inside / box_voxels),
                100.0 * inside / total_fg,
            )
        )
    return rows
