"""Synthetic atrium-like scan and ground-truth generation.

A phantom is an ellipsoidal body with tubular vein sleeves attached,
truncated below a valve plane; the mask is the voxelization of that solid
(a voxel is foreground iff its center lies inside) and the scan draws
Gaussian intensities per region. Everything is a pure function of
(spec, seed): identical specs produce bit-identical grids, which is what
makes the phantoms usable as oracles for the quality, metric and pipeline
modules.

Voxel centers sit at ((i + 0.5) * spacing) in mm from the volume corner;
all geometric fields are physical mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import GeometryOutOfBounds, InfeasibleTier
from .grids import Mask, Volume
from .quality import DEFAULT_MARGIN

DEFAULT_DIMS = (576, 576, 88)
DEFAULT_SPACING = (0.625, 0.625, 0.625)

_CROSS6 = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True)
class Tube:
    """Cylindrical vein sleeve: axis from the attachment point along
    ``direction`` for ``length_mm``, radius ``radius_mm``."""

    attach_mm: tuple[float, float, float]
    direction: tuple[float, float, float]
    radius_mm: float
    length_mm: float

    def unit_direction(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=np.float64)
        norm = float(np.linalg.norm(d))
        if norm == 0.0:
            raise ValueError("tube direction must be non-zero")
        return d / norm


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int] = DEFAULT_DIMS
    spacing: tuple[float, float, float] = DEFAULT_SPACING
    center_mm: tuple[float, float, float] | None = None  # None: volume center
    semi_axes_mm: tuple[float, float, float] = (30.0, 24.0, 18.0)
    tubes: tuple[Tube, ...] = ()
    # (normal, offset): keep voxels with normal . p >= offset; None disables
    valve_plane: tuple[tuple[float, float, float], float] | None = None
    mu_fg: float = 600.0
    sigma_fg: float = 40.0
    mu_bg: float = 200.0
    sigma_bg: float = 60.0
    seed: int = 0
    allow_clip: bool = False

    def resolved_center(self) -> tuple[float, float, float]:
        if self.center_mm is not None:
            return self.center_mm
        return tuple(n * s / 2.0 for n, s in zip(self.dims, self.spacing))


def default_phantom_spec(
    dims=DEFAULT_DIMS,
    spacing=DEFAULT_SPACING,
    seed: int = 0,
    n_tubes: int = 4,
    **overrides,
) -> PhantomSpec:
    """Challenge-scale phantom: ellipsoidal body, vein sleeves on the upper
    half, valve-plane truncation near the bottom.

    Without an explicit ``semi_axes_mm`` the body is scaled from the
    challenge-volume default so the whole assembly fits any grid extent.
    """
    if "semi_axes_mm" not in overrides:
        default_extent = tuple(n * s for n, s in zip(DEFAULT_DIMS, DEFAULT_SPACING))
        extent = tuple(n * s for n, s in zip(dims, spacing))
        scale = min(e / d for e, d in zip(extent, default_extent))
        overrides["semi_axes_mm"] = tuple(a * scale for a in (30.0, 24.0, 18.0))
    base = PhantomSpec(dims=dims, spacing=spacing, seed=seed, **overrides)
    cx, cy, cz = base.resolved_center()
    a, b, c = base.semi_axes_mm
    directions = [
        (0.75, 0.55, 0.37),
        (-0.75, 0.55, 0.37),
        (0.75, -0.55, 0.37),
        (-0.75, -0.55, 0.37),
    ][: max(0, int(n_tubes))]
    tubes = []
    for d in directions:
        u = np.asarray(d) / np.linalg.norm(d)
        # ellipsoid support distance along u; attach slightly inside for overlap
        reach = 1.0 / math.sqrt((u[0] / a) ** 2 + (u[1] / b) ** 2 + (u[2] / c) ** 2)
        attach = (cx + 0.9 * reach * u[0], cy + 0.9 * reach * u[1], cz + 0.9 * reach * u[2])
        tubes.append(
            Tube(attach_mm=attach, direction=d, radius_mm=0.16 * min(a, b, c), length_mm=0.5 * c)
        )
    valve = ((0.0, 0.0, 1.0), cz - 0.8 * c)
    return replace(base, tubes=tuple(tubes), valve_plane=valve)


def _bounds_check(spec: PhantomSpec) -> None:
    extent = tuple(n * s for n, s in zip(spec.dims, spec.spacing))
    cx, cy, cz = spec.resolved_center()
    boxes = [
        tuple((c - r, c + r) for c, r in zip((cx, cy, cz), spec.semi_axes_mm))
    ]
    for tube in spec.tubes:
        u = tube.unit_direction()
        start = np.asarray(tube.attach_mm)
        end = start + tube.length_mm * u
        boxes.append(
            tuple(
                (min(s, e) - tube.radius_mm, max(s, e) + tube.radius_mm)
                for s, e in zip(start, end)
            )
        )
    for box in boxes:
        for (lo, hi), limit in zip(box, extent):
            if lo < 0.0 or hi > limit:
                raise GeometryOutOfBounds(
                    f"phantom geometry [{lo:.1f}, {hi:.1f}] mm exceeds volume extent "
                    f"{limit:.1f} mm (set allow_clip=True to clip)"
                )


def _voxelize(spec: PhantomSpec) -> np.ndarray:
    nx, ny, nz = spec.dims
    sx, sy, sz = spec.spacing
    xs = (np.arange(nx, dtype=np.float64) + 0.5) * sx
    ys = (np.arange(ny, dtype=np.float64) + 0.5) * sy
    zs = (np.arange(nz, dtype=np.float64) + 0.5) * sz

    cx, cy, cz = spec.resolved_center()
    a, b, c = spec.semi_axes_mm
    q = (
        (((xs - cx) / a) ** 2)[:, None, None]
        + (((ys - cy) / b) ** 2)[None, :, None]
        + (((zs - cz) / c) ** 2)[None, None, :]
    )
    solid = q <= 1.0

    for tube in spec.tubes:
        u = tube.unit_direction()
        ax, ay, az = tube.attach_mm
        dx = (xs - ax)[:, None, None]
        dy = (ys - ay)[None, :, None]
        dz = (zs - az)[None, None, :]
        t = dx * u[0] + dy * u[1] + dz * u[2]
        r2 = dx**2 + dy**2 + dz**2 - t**2
        solid |= (t >= 0.0) & (t <= tube.length_mm) & (r2 <= tube.radius_mm**2)

    if spec.valve_plane is not None:
        (px, py, pz), offset = spec.valve_plane
        plane = px * xs[:, None, None] + py * ys[None, :, None] + pz * zs[None, None, :]
        solid &= plane >= offset
    return solid


def generate(spec: PhantomSpec) -> tuple[Volume, Mask]:
    """Deterministic (scan, truth mask) pair from a phantom spec."""
    if min(spec.semi_axes_mm) <= 0:
        raise ValueError(f"semi-axes must be positive, got {spec.semi_axes_mm!r}")
    for tube in spec.tubes:
        if tube.radius_mm <= 0 or tube.length_mm <= 0:
            raise ValueError("tube radius and length must be positive")
    if not spec.allow_clip:
        _bounds_check(spec)

    bits = _voxelize(spec)
    rng = np.random.default_rng(spec.seed)
    data = rng.normal(spec.mu_bg, spec.sigma_bg, size=spec.dims)
    n_fg = int(np.count_nonzero(bits))
    if n_fg:
        data[bits] = rng.normal(spec.mu_fg, spec.sigma_fg, size=n_fg)
    return Volume(data.astype(np.float32), spec.spacing), Mask(bits, spec.spacing)


# --- quality-tier cohorts -----------------------------------------------------

# snr targets comfortably inside each band (bands split at 1 and 3)
TIER_SNR_TARGETS = {"high": 0.5, "medium": 2.0, "low": 4.0}
DEFAULT_TIER_FRACTIONS = (0.15, 0.70, 0.15)  # high, medium, low


@dataclass(frozen=True)
class CohortVariation:
    """Uniform jitter half-widths applied per cohort member."""

    semi_axes_frac: float = 0.10
    center_shift_mm: float = 2.0
    intensity_frac: float = 0.05


def tier_counts(n: int, fractions=DEFAULT_TIER_FRACTIONS) -> tuple[int, int, int]:
    """Largest-remainder apportionment of n members over the three tiers."""
    if n < 1:
        raise ValueError(f"cohort size must be >= 1, got {n}")
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(
            f"tier fractions must be 3 non-negative values summing to 1, got {fractions!r}"
        )
    raw = [f * n for f in fractions]
    counts = [int(math.floor(r)) for r in raw]
    order = sorted(range(3), key=lambda i: (raw[i] - counts[i], -i), reverse=True)
    for k in range(n - sum(counts)):
        counts[order[k % 3]] += 1
    return tuple(counts)


def _jittered_spec(base: PhantomSpec, member_seed: int, variation: CohortVariation) -> PhantomSpec:
    """Jitter geometry and intensity; tubes and the valve plane follow the
    body so attachment (and therefore mask connectivity) is preserved."""
    rng = np.random.default_rng((member_seed, 0xC0F0))
    old_center = np.asarray(base.resolved_center())
    old_axes = np.asarray(base.semi_axes_mm)
    ratios = 1.0 + rng.uniform(-variation.semi_axes_frac, variation.semi_axes_frac, size=3)
    shift = rng.uniform(-variation.center_shift_mm, variation.center_shift_mm, size=3)
    new_center = old_center + shift
    new_axes = old_axes * ratios
    mu_fg = base.mu_fg * (1.0 + rng.uniform(-variation.intensity_frac, variation.intensity_frac))

    tubes = []
    for tube in base.tubes:
        rel = (np.asarray(tube.attach_mm) - old_center) * ratios
        tubes.append(replace(tube, attach_mm=tuple(new_center + rel)))
    valve = base.valve_plane
    if valve is not None:
        normal, offset = valve
        valve = (normal, offset + float(np.dot(np.asarray(normal), shift)))
    return replace(
        base,
        center_mm=tuple(new_center),
        semi_axes_mm=tuple(new_axes),
        tubes=tuple(tubes),
        valve_plane=valve,
        mu_fg=mu_fg,
        seed=member_seed,
    )


def _sigma_bg_for_band(spec: PhantomSpec, bits: np.ndarray, target_snr: float, margin: int) -> float:
    """Back-compute the background noise level that lands assess_quality at
    the target snr, correcting for the dilation rim's pull on the
    foreground mean."""
    if spec.mu_fg <= spec.mu_bg:
        raise InfeasibleTier("mu_fg must exceed mu_bg to target any quality band")
    n_mask = int(np.count_nonzero(bits))
    if margin > 0:
        dilated = ndimage.binary_dilation(bits, structure=_CROSS6, iterations=margin)
        n_dilated = int(np.count_nonzero(dilated))
    else:
        n_dilated = n_mask
    w = n_mask / n_dilated
    return target_snr * w * (spec.mu_fg - spec.mu_bg)


def generate_cohort(
    base: PhantomSpec,
    n: int,
    variation: CohortVariation | None = None,
    seed: int = 0,
    tier_fractions=DEFAULT_TIER_FRACTIONS,
    margin: int = DEFAULT_MARGIN,
) -> list[tuple[Volume, Mask, str]]:
    """Deterministic cohort with a declared quality-band mix.

    Member i jitters the base geometry with seed ``seed + i`` and draws
    its noise level so that :func:`labench.quality.assess_quality` lands
    in the member's assigned band.
    """
    variation = variation or CohortVariation()
    counts = tier_counts(n, tier_fractions)
    tiers = ["high"] * counts[0] + ["medium"] * counts[1] + ["low"] * counts[2]

    members = []
    for i, tier in enumerate(tiers):
        spec = _jittered_spec(base, seed + i, variation)
        bits = _voxelize(spec)
        if not bits.any():
            raise GeometryOutOfBounds(f"cohort member {i} has an empty mask")
        sigma_bg = _sigma_bg_for_band(spec, bits, TIER_SNR_TARGETS[tier], margin)
        volume, mask = generate(replace(spec, sigma_bg=sigma_bg))
        members.append((volume, mask, tier))
    return members
