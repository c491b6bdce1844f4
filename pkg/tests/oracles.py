"""Independent brute-force oracles used to pin expected values.

These deliberately avoid the code paths they check: surfaces come from
explicit neighbor loops, distances from all-pairs enumeration, histogram
equalization from per-pixel rank counting, and the t-distribution CDF from
numerical quadrature of the density.
"""

import math

import numpy as np
from scipy import integrate

from labench.grids import Mask


def surface_points(m: Mask) -> np.ndarray:
    """(n, 3) indices of foreground voxels with a background 6-neighbor
    (out-of-grid counts as background)."""
    bits = m.bits
    nx, ny, nz = bits.shape
    points = []
    for ix, iy, iz in zip(*np.nonzero(bits)):
        on_surface = False
        for dx, dy, dz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            jx, jy, jz = ix + dx, iy + dy, iz + dz
            if not (0 <= jx < nx and 0 <= jy < ny and 0 <= jz < nz) or not bits[jx, jy, jz]:
                on_surface = True
                break
        if on_surface:
            points.append((ix, iy, iz))
    return np.asarray(points, dtype=np.float64)


def _pairwise_min_dists(points_a, points_b, spacing) -> np.ndarray:
    """For every point of A, the min Euclidean mm distance to B (all pairs)."""
    sa = points_a * np.asarray(spacing)
    sb = points_b * np.asarray(spacing)
    d2 = ((sa[:, None, :] - sb[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(d2.min(axis=1))


def brute_force_hd(a: Mask, b: Mask, mode: str = "symmetric") -> float:
    pa, pb = surface_points(a), surface_points(b)
    b_to_a = _pairwise_min_dists(pb, pa, a.spacing)
    if mode == "directed":
        return float(b_to_a.max())
    a_to_b = _pairwise_min_dists(pa, pb, a.spacing)
    return float(max(a_to_b.max(), b_to_a.max()))


def brute_force_stsd(a: Mask, b: Mask) -> float:
    pa, pb = surface_points(a), surface_points(b)
    a_to_b = _pairwise_min_dists(pa, pb, a.spacing)
    b_to_a = _pairwise_min_dists(pb, pa, a.spacing)
    return float((a_to_b.sum() + b_to_a.sum()) / (len(pa) + len(pb)))


def counting_dice(a: Mask, b: Mask) -> float:
    inter = sum(1 for pa, pb in zip(a.flat(), b.flat()) if pa and pb)
    na = int(a.flat().sum())
    nb = int(b.flat().sum())
    return 1.0 if na + nb == 0 else 2.0 * inter / (na + nb)


def counting_iou(a: Mask, b: Mask) -> float:
    inter = union = 0
    for pa, pb in zip(a.flat(), b.flat()):
        inter += bool(pa and pb)
        union += bool(pa or pb)
    return 1.0 if union == 0 else inter / union


def counting_sens_spec(pred: Mask, truth: Mask) -> tuple[float, float]:
    tp = fn = tn = fp = 0
    for p, t in zip(pred.flat(), truth.flat()):
        if t:
            tp, fn = tp + bool(p), fn + (not p)
        else:
            fp, tn = fp + bool(p), tn + (not p)
    return tp / (tp + fn), tn / (tn + fp)


def equalize_by_rank(img: np.ndarray) -> np.ndarray:
    """Histogram equalization out = round((L-1) * P(X <= v)), computed by
    per-pixel counting rather than a cumulative histogram."""
    levels = int(np.iinfo(img.dtype).max) + 1
    flat = np.sort(img.ravel())
    n = flat.size
    out = np.empty(img.shape, dtype=img.dtype)
    for idx, value in np.ndenumerate(img):
        cdf = np.searchsorted(flat, value, side="right") / n
        out[idx] = int(math.floor(cdf * (levels - 1) + 0.5))
    return out


def t_two_tailed_p_quadrature(t: float, df: float) -> float:
    """Two-tailed t-test p-value via numerical integration of the density."""

    def pdf(u):
        return (
            math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2))
            / math.sqrt(df * math.pi)
            * (1 + u * u / df) ** (-(df + 1) / 2)
        )

    tail, _ = integrate.quad(pdf, abs(t), math.inf)
    return 2.0 * tail
