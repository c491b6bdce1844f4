"""Per-case segmentation metrics.

Overlap scores (Dice, IoU, sensitivity, specificity) are exact voxel
counts; boundary distances (Hausdorff, symmetric mean surface distance)
are Euclidean distances in mm between surface voxel centers, weighted by
the grid spacing. A surface voxel is a foreground voxel with at least one
background 6-neighbor, where the grid border counts as background.

Distance fields are computed with an exact Euclidean distance transform
restricted to the union bounding box of the two surfaces, which is
loss-free (every source and query voxel lies inside the box) and keeps a
full-resolution case well under the per-case time budget.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np
from scipy import ndimage

from .errors import DegenerateTruth, EmptyMask
from .grids import Mask, check_same_geometry

_CROSS6 = ndimage.generate_binary_structure(3, 1)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class CaseMetrics:
    """All per-case metric values for one prediction/truth pair.

    ``hd_mm`` and ``stsd_mm`` are None when the prediction is empty (no
    surface to measure against); the CSV form leaves those cells blank.
    """

    dice: float
    iou: float
    sensitivity: float
    specificity: float
    hd_mm: float | None
    stsd_mm: float | None
    diameter_pred_mm: float
    diameter_true_mm: float
    diameter_err_pct: float
    volume_pred_cm3: float
    volume_true_cm3: float
    volume_err_pct: float


# Fixed serialization order for per-case rows.
CASE_CSV_COLUMNS = (
    "case_id",
    "dice",
    "iou",
    "sensitivity",
    "specificity",
    "hd_mm",
    "stsd_mm",
    "diameter_err_pct",
    "volume_err_pct",
)


def surface_voxels(m: Mask) -> np.ndarray:
    """Boolean array marking boundary voxels of the mask."""
    if m.is_empty:
        return np.zeros(m.dims, dtype=bool)
    # erosion only changes voxels near the mask, so work on the bounding
    # box; everything beyond it is background either way
    ix, iy, iz = np.nonzero(m.bits)
    box = tuple(slice(int(c.min()), int(c.max()) + 1) for c in (ix, iy, iz))
    inside = m.bits[box]
    interior = ndimage.binary_erosion(inside, structure=_CROSS6, border_value=0)
    out = np.zeros(m.dims, dtype=bool)
    out[box] = inside & ~interior
    return out


def confusion_counts(pred: Mask, truth: Mask) -> ConfusionCounts:
    check_same_geometry(pred, truth)
    tp = int(np.count_nonzero(pred.bits & truth.bits))
    fp = pred.count - tp
    fn = truth.count - tp
    tn = pred.nvox - tp - fp - fn
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def dice(a: Mask, b: Mask) -> float:
    """Overlap score 2|A∩B| / (|A|+|B|); 1.0 when both masks are empty."""
    check_same_geometry(a, b)
    na, nb = a.count, b.count
    if na == 0 and nb == 0:
        return 1.0
    inter = int(np.count_nonzero(a.bits & b.bits))
    return 2.0 * inter / (na + nb)


def iou(a: Mask, b: Mask) -> float:
    """Jaccard index |A∩B| / |A∪B|; 1.0 when both masks are empty."""
    check_same_geometry(a, b)
    inter = int(np.count_nonzero(a.bits & b.bits))
    union = a.count + b.count - inter
    if union == 0:
        return 1.0
    return inter / union


def sensitivity_specificity(pred: Mask, truth: Mask) -> tuple[float, float, ConfusionCounts]:
    """True-positive and true-negative rates of the prediction vs truth."""
    counts = confusion_counts(pred, truth)
    if counts.tp + counts.fn == 0 or counts.tn + counts.fp == 0:
        raise DegenerateTruth("truth must contain both foreground and background voxels")
    sens = counts.tp / (counts.tp + counts.fn)
    spec = counts.tn / (counts.tn + counts.fp)
    return sens, spec, counts


def _surface_distance_fields(a: Mask, b: Mask) -> tuple[np.ndarray, np.ndarray]:
    """Distances (mm) from each A-surface voxel to B's surface and vice versa.

    Returns (dists of surf(A) points to surf(B), dists of surf(B) points to
    surf(A)), each a flat float array.
    """
    surf_a = surface_voxels(a)
    surf_b = surface_voxels(b)

    either = surf_a | surf_b
    ix, iy, iz = np.nonzero(either)
    lo = (ix.min(), iy.min(), iz.min())
    hi = (ix.max() + 1, iy.max() + 1, iz.max() + 1)
    box = tuple(slice(l, h) for l, h in zip(lo, hi))
    sa = surf_a[box]
    sb = surf_b[box]

    dt_to_b = ndimage.distance_transform_edt(~sb, sampling=a.spacing)
    dt_to_a = ndimage.distance_transform_edt(~sa, sampling=a.spacing)
    return dt_to_b[sa], dt_to_a[sb]


def hausdorff_mm(a: Mask, b: Mask, mode: str = "symmetric") -> float:
    """Worst-case surface-to-surface distance in mm.

    ``directed`` is the max over b's surface of the min distance to a's
    surface; ``symmetric`` (the reporting default) is the max of the two
    directed values.
    """
    check_same_geometry(a, b)
    if mode not in ("directed", "symmetric"):
        raise ValueError(f"mode must be 'directed' or 'symmetric', got {mode!r}")
    if a.is_empty or b.is_empty:
        raise EmptyMask("Hausdorff distance requires two non-empty masks")
    d_a_to_b, d_b_to_a = _surface_distance_fields(a, b)
    if mode == "directed":
        return float(d_b_to_a.max())
    return float(max(d_a_to_b.max(), d_b_to_a.max()))


def stsd_mm(a: Mask, b: Mask) -> float:
    """Mean symmetric surface-to-surface distance in mm."""
    check_same_geometry(a, b)
    if a.is_empty or b.is_empty:
        raise EmptyMask("surface distance requires two non-empty masks")
    d_a_to_b, d_b_to_a = _surface_distance_fields(a, b)
    return float((d_a_to_b.sum() + d_b_to_a.sum()) / (d_a_to_b.size + d_b_to_a.size))


_AXES = {"x": 0, "y": 1, "z": 2}


def la_diameter_mm(m: Mask, axis: int | str = "x") -> float:
    """Foreground extent along one axis in mm, (max - min + 1) * spacing.

    The anterior-posterior diameter corresponds to the x axis in the
    challenge orientation; other datasets can select a different axis.
    """
    ax = _AXES.get(axis, axis) if isinstance(axis, str) else int(axis)
    if ax not in (0, 1, 2):
        raise ValueError(f"axis must be one of x, y, z (or 0..2), got {axis!r}")
    if m.is_empty:
        raise EmptyMask("diameter of an empty mask is undefined")
    occupied = np.nonzero(m.bits.any(axis=tuple(i for i in range(3) if i != ax)))[0]
    return float(occupied[-1] - occupied[0] + 1) * m.spacing[ax]


def la_volume_cm3(m: Mask) -> float:
    """Foreground volume in cubic centimeters."""
    sx, sy, sz = m.spacing
    return m.count * sx * sy * sz / 1000.0


def evaluate_case(pred: Mask, truth: Mask, diameter_axis: int | str = "x") -> CaseMetrics:
    """Compute every technical and biological metric for one case.

    The truth must have both foreground and background voxels. An empty
    prediction is legal: its surface distances are absent (None), its
    diameter and volume are 0 and the percent errors are 100.
    """
    sens, spec, counts = sensitivity_specificity(pred, truth)
    dice_v = 2.0 * counts.tp / (2 * counts.tp + counts.fp + counts.fn)
    iou_v = counts.tp / (counts.tp + counts.fp + counts.fn)

    if pred.is_empty:
        hd = stsd = None
        diameter_pred = 0.0
    else:
        d_p_to_t, d_t_to_p = _surface_distance_fields(pred, truth)
        hd = float(max(d_p_to_t.max(), d_t_to_p.max()))
        stsd = float((d_p_to_t.sum() + d_t_to_p.sum()) / (d_p_to_t.size + d_t_to_p.size))
        diameter_pred = la_diameter_mm(pred, diameter_axis)

    diameter_true = la_diameter_mm(truth, diameter_axis)
    volume_pred = la_volume_cm3(pred)
    volume_true = la_volume_cm3(truth)

    return CaseMetrics(
        dice=dice_v,
        iou=iou_v,
        sensitivity=sens,
        specificity=spec,
        hd_mm=hd,
        stsd_mm=stsd,
        diameter_pred_mm=diameter_pred,
        diameter_true_mm=diameter_true,
        diameter_err_pct=100.0 * abs(diameter_pred - diameter_true) / diameter_true,
        volume_pred_cm3=volume_pred,
        volume_true_cm3=volume_true,
        volume_err_pct=100.0 * abs(volume_pred - volume_true) / volume_true,
    )


def dice_profile_z(pred: Mask, truth: Mask) -> list[tuple[int, float | None]]:
    """Slice-by-slice 2D Dice along z.

    Returns (z, dice) per slice with 0-based z; slices where both masks
    are empty have no defined value and carry None.
    """
    check_same_geometry(pred, truth)
    inter = np.count_nonzero(pred.bits & truth.bits, axis=(0, 1))
    np_ = np.count_nonzero(pred.bits, axis=(0, 1))
    nt = np.count_nonzero(truth.bits, axis=(0, 1))
    profile: list[tuple[int, float | None]] = []
    for z in range(pred.dims[2]):
        denom = int(np_[z] + nt[z])
        profile.append((z, 2.0 * int(inter[z]) / denom if denom else None))
    return profile


# --- serialization --------------------------------------------------------


def _fmt(value: float | None) -> str:
    return "" if value is None else format(value, ".6g")


def case_csv_rows(cases: dict[str, CaseMetrics]) -> str:
    """Render per-case metrics as CSV text, rows sorted by case id."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CASE_CSV_COLUMNS)
    for case_id in sorted(cases):
        c = cases[case_id]
        writer.writerow(
            [case_id] + [_fmt(getattr(c, col)) for col in CASE_CSV_COLUMNS[1:]]
        )
    return buf.getvalue()


def case_json_obj(cases: dict[str, CaseMetrics]) -> list[dict]:
    """Per-case metrics as JSON-ready records, sorted by case id."""
    out = []
    for case_id in sorted(cases):
        rec: dict = {"case_id": case_id}
        for f in dataclass_fields(CaseMetrics):
            rec[f.name] = getattr(cases[case_id], f.name)
        out.append(rec)
    return out


def read_case_csv(path) -> dict[str, dict[str, float | None]]:
    """Read a per-case metrics CSV back into {case_id: {column: value}}."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows: dict[str, dict[str, float | None]] = {}
        for row in reader:
            case_id = row.pop("case_id")
            rows[case_id] = {
                k: (float(v) if v not in ("", None) else None) for k, v in row.items()
            }
    return rows
