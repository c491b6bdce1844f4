"""Command-line interface.

One executable, eight subcommands: evaluate, rank, quality, preprocess,
postprocess, pipeline, experiment {offset|patch-size}, synth. Exit codes:
0 success, 1 usage or input error, 2 partial failure (some cases failed
or were unpaired; the rest were processed and written).

Outputs are deterministic: rows are sorted by case or team id, floats
print with 6 significant digits, and gzip payloads carry a fixed mtime,
so identical inputs and seeds give byte-identical files regardless of
``--jobs``. ``LABENCH_JOBS`` sets the default worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import phantom, pipeline, postprocess, preprocess
from .errors import DegeneratePartition, DegenerateSample, LabenchError
from .grids import Mask, Volume, downsample
from .metrics import (
    CASE_CSV_COLUMNS,
    case_csv_rows,
    case_json_obj,
    evaluate_case,
    read_case_csv,
)
from .nrrd_io import read_nrrd, write_nrrd
from .quality import assess_quality, quality_distribution
from .stats import (
    CaseMetrics,
    TeamResult,
    build_leaderboard,
    compare_groups,
    correlate,
    leaderboard_csv,
    leaderboard_from_summary,
    leaderboard_json_obj,
    read_summary_csv,
)


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1 (argparse defaults to 2, which we reserve
    # for partial failures)
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("LABENCH_JOBS", "1")))
    except ValueError:
        return 1


def _common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="tabular output format"
    )
    parser.add_argument(
        "--jobs", type=int, default=_default_jobs(), help="worker processes (env LABENCH_JOBS)"
    )


def _parse_ints(text: str, n: int, name: str) -> tuple[int, ...]:
    parts = [p for p in text.replace("x", ",").split(",") if p]
    if len(parts) != n:
        raise SystemExit(_fail(f"{name} needs {n} comma-separated integers, got {text!r}"))
    return tuple(int(p) for p in parts)


def _fail(message: str) -> int:
    sys.stderr.write(f"labench: error: {message}\n")
    return 1


def _require_dir(path: str, name: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise SystemExit(_fail(f"{name} {path!r} is not a directory"))
    return p


def _require_file(path: str, name: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise SystemExit(_fail(f"{name} {path!r} is not a file"))
    return p


# --- evaluate ---------------------------------------------------------------


def _case_id_of(path: Path) -> str:
    stem = path.stem
    return stem[:-6] if stem.endswith("_label") else stem


def _index_dir(directory: Path, prefer_label: bool = True) -> dict[str, Path]:
    """Map case ids to files; ``<id>_label.nrrd`` wins over ``<id>.nrrd``
    when both exist (the plain file is then a scan, not a mask)."""
    plain: dict[str, Path] = {}
    label: dict[str, Path] = {}
    for path in sorted(directory.glob("*.nrrd")):
        target = label if path.stem.endswith("_label") else plain
        target.setdefault(_case_id_of(path), path)
    first, second = (label, plain) if prefer_label else (plain, label)
    index = dict(second)
    index.update(first)
    return index


def _read_mask_strict(path):
    """Read a mask file; 0/1 grids of any sample type binarize, anything
    else is an error rather than a silent nonzero test."""
    grid = read_nrrd(path)
    if isinstance(grid, Volume):
        if not bool(((grid.data == 0) | (grid.data == 1)).all()):
            raise LabenchError(f"{path} is not a binary mask")
        return Mask(grid.data != 0, grid.spacing)
    return grid


def _evaluate_one(task):
    case_id, pred_path, truth_path = task
    try:
        pred = _read_mask_strict(pred_path)
        truth = _read_mask_strict(truth_path)
        return case_id, evaluate_case(pred, truth), None
    except Exception as exc:  # report per-case failures, keep going
        return case_id, None, f"{type(exc).__name__}: {exc}"


def _run_tasks(worker, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def cmd_evaluate(args) -> int:
    pred_dir = _require_dir(args.pred_dir, "prediction directory")
    truth_dir = _require_dir(args.truth_dir, "truth directory")
    preds = _index_dir(pred_dir)
    truths = _index_dir(truth_dir)

    shared = sorted(set(preds) & set(truths))
    unpaired = sorted(set(preds) ^ set(truths))
    tasks = [(cid, str(preds[cid]), str(truths[cid])) for cid in shared]
    results = _run_tasks(_evaluate_one, tasks, args.jobs)

    cases: dict[str, CaseMetrics] = {}
    failures: list[str] = []
    for case_id, metrics_row, error in results:
        if error is None:
            cases[case_id] = metrics_row
        else:
            failures.append(f"{case_id}: {error}")

    out = Path(args.out)
    if args.format == "json":
        out.write_text(json.dumps(case_json_obj(cases), indent=2) + "\n")
    else:
        out.write_text(case_csv_rows(cases))

    for case_id in unpaired:
        sys.stderr.write(f"labench: unpaired case: {case_id}\n")
    for failure in sorted(failures):
        sys.stderr.write(f"labench: failed case: {failure}\n")
    return 2 if unpaired or failures else 0


# --- rank --------------------------------------------------------------------


def _team_from_metrics_csv(path: Path, attributes: dict[str, str]) -> TeamResult:
    rows = read_case_csv(path)
    cases = {}
    for case_id, row in rows.items():
        cases[case_id] = CaseMetrics(
            dice=row["dice"],
            iou=row["iou"],
            sensitivity=row["sensitivity"],
            specificity=row["specificity"],
            hd_mm=row["hd_mm"],
            stsd_mm=row["stsd_mm"],
            diameter_pred_mm=0.0,
            diameter_true_mm=0.0,
            diameter_err_pct=row["diameter_err_pct"],
            volume_pred_cm3=0.0,
            volume_true_cm3=0.0,
            volume_err_pct=row["volume_err_pct"],
        )
    return TeamResult(team_id=path.stem, cases=cases, attributes=attributes)


def _read_attributes(path: Path) -> dict[str, dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "team_id" not in reader.fieldnames:
            raise SystemExit(_fail(f"attributes file {path} needs a team_id column"))
        return {row["team_id"]: {k: v for k, v in row.items() if k != "team_id"} for row in reader}


def cmd_rank(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.summary:
        board = leaderboard_from_summary(read_summary_csv(_require_file(args.summary, "summary")))
        (out_dir / "leaderboard.csv").write_text(leaderboard_csv(board))
        report = {
            "metadata": _rank_metadata("published-summary ingest"),
            "leaderboard": leaderboard_json_obj(board),
        }
        (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
        return 0

    if not args.metrics:
        raise SystemExit(_fail("rank needs --metrics files or --summary"))
    attr_map: dict[str, dict[str, str]] = {}
    if args.attributes:
        attr_map = _read_attributes(_require_file(args.attributes, "attributes"))

    teams = []
    for metrics_path in args.metrics:
        path = _require_file(metrics_path, "metrics file")
        teams.append(_team_from_metrics_csv(path, attr_map.get(path.stem, {})))

    board = build_leaderboard(teams)
    (out_dir / "leaderboard.csv").write_text(leaderboard_csv(board))

    comparisons = []
    attribute_names = sorted({name for attrs in attr_map.values() for name in attrs})
    for attribute in attribute_names:
        try:
            comp = compare_groups(teams, attribute, metric="dice")
        except DegeneratePartition:
            continue
        comparisons.append(
            {
                "attribute": comp.attribute,
                "metric": comp.metric,
                "groups": {
                    value: {"teams": n, "mean": mean} for value, (n, mean) in comp.groups.items()
                },
                "p_value": comp.p_value,
            }
        )

    quality_corr = None
    if args.quality:
        quality_rows = _read_quality_csv(_require_file(args.quality, "quality csv"))
        quality_corr = _quality_dice_correlation(teams, quality_rows)

    report = {
        "metadata": _rank_metadata("per-case metrics"),
        "leaderboard": leaderboard_json_obj(board),
        "group_comparisons": comparisons,
        "quality_correlation": quality_corr,
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return 0


def _rank_metadata(source: str) -> dict:
    return {
        "source": source,
        "hd_mode": "symmetric",
        "ranking": "mean dice desc; ties by mean stsd asc, then team id",
        "p_value": "two-tailed Welch t-test, team per-case dice vs pooled other teams",
    }


def _read_quality_csv(path: Path) -> dict[str, float]:
    with open(path, newline="") as fh:
        return {row["scan_id"]: float(row["snr"]) for row in csv.DictReader(fh)}


def _quality_dice_correlation(teams, snr_by_case: dict[str, float]):
    case_ids = sorted(set(teams[0].cases) & set(snr_by_case))
    if len(case_ids) < 2:
        return None
    mean_dice = [
        sum(team.cases[cid].dice for team in teams) / len(teams) for cid in case_ids
    ]
    snr = [snr_by_case[cid] for cid in case_ids]
    try:
        r = correlate(snr, mean_dice)
    except (DegenerateSample, LabenchError):
        return None
    return {"against": "snr", "metric": "mean dice", "pearson_r": r, "n": len(case_ids)}


# --- quality ------------------------------------------------------------------


def _quality_one(task):
    scan_id, scan_path, mask_path, margin = task
    try:
        scan = read_nrrd(scan_path, as_mask=False)
        mask = _read_mask_strict(mask_path)
        report = assess_quality(scan, mask, margin=margin)
        return scan_id, report, None
    except Exception as exc:
        return scan_id, None, f"{type(exc).__name__}: {exc}"


def cmd_quality(args) -> int:
    scans_dir = _require_dir(args.scans, "scan directory")
    masks_dir = _require_dir(args.masks, "mask directory")
    scans = _index_dir(scans_dir, prefer_label=False)
    masks = _index_dir(masks_dir)
    shared = sorted(set(scans) & set(masks))
    unpaired = sorted(set(scans) ^ set(masks))

    tasks = [(sid, str(scans[sid]), str(masks[sid]), args.margin) for sid in shared]
    results = _run_tasks(_quality_one, tasks, args.jobs)

    rows = {}
    failures = []
    for scan_id, report, error in results:
        if error is None:
            rows[scan_id] = report
        else:
            failures.append(f"{scan_id}: {error}")

    out = Path(args.out)
    if args.format == "json":
        payload = [
            {"scan_id": sid, "snr": r.snr, "cr": r.cr, "het": r.het, "band": r.band}
            for sid, r in sorted(rows.items())
        ]
        out.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("scan_id", "snr", "cr", "het", "band"))
        for sid in sorted(rows):
            r = rows[sid]
            writer.writerow(
                (sid, format(r.snr, ".6g"), format(r.cr, ".6g"), format(r.het, ".6g"), r.band)
            )
        out.write_text(buf.getvalue())

    if rows:
        dist = quality_distribution(rows.values())
        summary = ", ".join(f"{band}: {cnt} ({frac:.0%})" for band, (cnt, frac) in dist.items())
        sys.stderr.write(f"labench: band distribution: {summary}\n")
    for scan_id in unpaired:
        sys.stderr.write(f"labench: unpaired scan: {scan_id}\n")
    for failure in sorted(failures):
        sys.stderr.write(f"labench: failed scan: {failure}\n")
    return 2 if unpaired or failures else 0


# --- preprocess -----------------------------------------------------------------


def cmd_preprocess(args) -> int:
    volume = read_nrrd(_require_file(args.input, "input volume"), as_mask=False)
    if not isinstance(volume, Volume):
        raise SystemExit(_fail("preprocess expects a grayscale volume"))
    mask = None
    if args.mask:
        mask = read_nrrd(_require_file(args.mask, "mask"), as_mask=True)

    if args.downsample:
        factor = _parse_ints(args.downsample, 3, "--downsample")
        volume = downsample(volume, factor)
    if args.normalize:
        volume = preprocess.normalize_intensity(volume)
    if args.clahe:
        tx, ty, clip = args.clahe.split(",")
        volume = preprocess.clahe_slicewise(volume, (int(tx), int(ty)), float(clip))
    if args.augment:
        if mask is None:
            raise SystemExit(_fail("--augment needs --mask (transforms apply to both)"))
        specs = preprocess.load_augmentation_specs(_require_file(args.augment, "augment config"))
        pipe = preprocess.AugmentationPipeline(specs, base_seed=args.seed)
        pipe.register(volume, mask)
        volume, mask = pipe.variant(args.variant)

    write_nrrd(volume, args.out, encoding=args.encoding)
    if mask is not None and args.mask_out:
        write_nrrd(mask, args.mask_out, encoding=args.encoding)
    return 0


# --- postprocess ----------------------------------------------------------------


def _parse_op(text: str):
    parts = text.split(":")
    name = parts[0]
    if name == "largest":
        connectivity = int(parts[1]) if len(parts) > 1 else 26
        return lambda m: postprocess.largest_component(m, connectivity)
    if name in ("dilate", "erode", "close", "open"):
        kind = parts[1] if len(parts) > 1 else "cross"
        radius = int(parts[2]) if len(parts) > 2 else 1
        se = postprocess.StructuringElement(kind, radius)
        fn = {
            "dilate": postprocess.dilate,
            "erode": postprocess.erode,
            "close": postprocess.close_mask,
            "open": postprocess.open_mask,
        }[name]
        return lambda m: fn(m, se)
    if name == "smooth":
        iterations = int(parts[1]) if len(parts) > 1 else 1
        return lambda m: postprocess.smooth_surface(m, iterations)
    raise SystemExit(_fail(f"unknown postprocess op {text!r}"))


def cmd_postprocess(args) -> int:
    mask = read_nrrd(_require_file(args.input, "input mask"), as_mask=True)
    for op_text in args.ops:
        mask = _parse_op(op_text)(mask)
    write_nrrd(mask, args.out, encoding=args.encoding)
    return 0


# --- pipeline --------------------------------------------------------------------


def _build_localizer(args, truth):
    if args.localizer == "oracle":
        if truth is None:
            raise SystemExit(_fail("--localizer oracle needs --truth"))
        return pipeline.OracleLocalizer(truth)
    if args.localizer == "fixed":
        return pipeline.FixedCenterLocalizer()
    return pipeline.ThresholdLocalizer(args.downsample_factor)


def _build_segmenter(args, truth):
    if args.segmenter == "oracle":
        if truth is None:
            raise SystemExit(_fail("--segmenter oracle needs --truth"))
        return pipeline.OracleSegmenter(truth)
    if args.segmenter == "external":
        if not args.pred_dir or not args.case_id:
            raise SystemExit(_fail("--segmenter external needs --pred-dir and --case-id"))
        return pipeline.ExternalPredictionSegmenter(args.pred_dir, args.case_id)
    return pipeline.ThresholdSegmenter()


def cmd_pipeline(args) -> int:
    scan = read_nrrd(_require_file(args.scan, "scan"), as_mask=False)
    truth = read_nrrd(_require_file(args.truth, "truth"), as_mask=True) if args.truth else None
    roi = _parse_ints(args.roi, 3, "--roi")
    localizer = _build_localizer(args, truth)
    segmenter = _build_segmenter(args, truth)
    predicted = pipeline.run_pipeline(scan, localizer, segmenter, roi)
    write_nrrd(predicted, args.out, encoding=args.encoding)
    if truth is not None:
        from .metrics import dice as dice_fn

        sys.stderr.write(f"labench: dice vs truth: {dice_fn(predicted, truth):.6g}\n")
    return 0


# --- experiment --------------------------------------------------------------------


def _write_table(path, header, rows, fmt: str):
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")
        return
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(v, ".6g") if isinstance(v, float) else v for v in row])
    Path(path).write_text(buf.getvalue())


def cmd_experiment_offset(args) -> int:
    scan = read_nrrd(_require_file(args.scan, "scan"), as_mask=False)
    truth = read_nrrd(_require_file(args.truth, "truth"), as_mask=True)
    segmenter = (
        pipeline.OracleSegmenter(truth)
        if args.segmenter == "oracle"
        else pipeline.ThresholdSegmenter()
    )
    offsets = [float(p) for p in args.offsets.split(",")]
    roi = _parse_ints(args.roi, 3, "--roi")
    curve = pipeline.offset_sweep(scan, truth, segmenter, roi, offsets, axis=args.axis)
    _write_table(args.out, ("offset_pct", "dice"), curve, args.format)
    return 0


def cmd_experiment_patch_size(args) -> int:
    scan = read_nrrd(_require_file(args.scan, "scan"), as_mask=False)
    truth = read_nrrd(_require_file(args.truth, "truth"), as_mask=True)
    sizes = [_parse_ints(s, 2, "--sizes entry") for s in args.sizes.split(",")]
    rows = pipeline.patch_size_sweep(scan, truth, sizes, z_extent=args.z_extent)
    _write_table(
        args.out,
        ("size_x", "size_y", "background_pct", "containment_pct"),
        rows,
        args.format,
    )
    return 0


# --- synth -------------------------------------------------------------------------


def _synth_one(task):
    base, i, tier, seed, out_dir, encoding, digits = task
    volume, mask, _ = phantom.generate_cohort(
        base, 1, seed=seed + i, tier_fractions=_single_tier_fraction(tier)
    )[0]
    case_id = f"case_{i:0{digits}d}"
    write_nrrd(volume, Path(out_dir) / f"{case_id}.nrrd", encoding=encoding)
    write_nrrd(mask, Path(out_dir) / f"{case_id}_label.nrrd", encoding=encoding)
    return case_id, tier, seed + i


def _single_tier_fraction(tier: str) -> tuple[float, float, float]:
    return {
        "high": (1.0, 0.0, 0.0),
        "medium": (0.0, 1.0, 0.0),
        "low": (0.0, 0.0, 1.0),
    }[tier]


def cmd_synth(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dims = _parse_ints(args.dims, 3, "--dims")
    spacing = tuple(float(s) for s in args.spacing.split(","))
    if len(spacing) == 1:
        spacing = spacing * 3
    fractions = tuple(float(f) for f in args.tier_fractions.split(","))
    base = phantom.default_phantom_spec(dims=dims, spacing=spacing)

    counts = phantom.tier_counts(args.count, fractions)
    tiers = ["high"] * counts[0] + ["medium"] * counts[1] + ["low"] * counts[2]
    digits = max(3, len(str(args.count - 1)))
    tasks = [
        (base, i, tier, args.seed, str(out_dir), args.encoding, digits)
        for i, tier in enumerate(tiers)
    ]
    results = _run_tasks(_synth_one, tasks, args.jobs)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("id", "tier", "seed"))
    for case_id, tier, seed in sorted(results):
        writer.writerow((case_id, tier, seed))
    (out_dir / "manifest.csv").write_text(buf.getvalue())
    return 0


# --- parser ---------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="labench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("evaluate", parents=[], help="score prediction masks against truths")
    p.add_argument("pred_dir", help="directory of <id>.nrrd prediction masks")
    p.add_argument("truth_dir", help="directory of <id>_label.nrrd (or <id>.nrrd) truths")
    p.add_argument("--out", required=True, help="per-case metrics file")
    _common_options(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank", help="build a leaderboard from per-team metrics files")
    p.add_argument("--metrics", nargs="*", default=[], help="per-team metrics CSVs (team id = stem)")
    p.add_argument("--attributes", help="CSV mapping team_id to method attributes")
    p.add_argument("--quality", help="per-scan quality CSV for the quality/dice correlation")
    p.add_argument("--summary", help="rank a pre-aggregated per-team summary CSV instead")
    p.add_argument("--out-dir", required=True, help="directory for leaderboard.csv + report.json")
    _common_options(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("quality", help="assess per-scan SNR/CR/HET quality")
    p.add_argument("--scans", required=True, help="directory of scan volumes")
    p.add_argument("--masks", required=True, help="directory of cavity masks")
    p.add_argument("--out", required=True, help="per-scan quality file")
    p.add_argument("--margin", type=int, default=3, help="foreground dilation margin (voxels)")
    _common_options(p)
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("preprocess", help="downsample / normalize / CLAHE / augment a volume")
    p.add_argument("input", help="input volume (.nrrd)")
    p.add_argument("--out", required=True)
    p.add_argument("--downsample", help="per-axis integer factors, e.g. 2,2,1")
    p.add_argument("--normalize", action="store_true", help="rescale intensities to [0,1]")
    p.add_argument("--clahe", help="tiles and clip limit, e.g. 8,8,3.0")
    p.add_argument("--augment", help="JSON augmentation config")
    p.add_argument("--mask", help="mask transformed alongside the volume")
    p.add_argument("--mask-out", help="where to write the transformed mask")
    p.add_argument("--variant", type=int, default=0, help="augmentation variant index")
    p.add_argument("--encoding", choices=("raw", "gzip"), default="raw")
    _common_options(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("postprocess", help="chain mask clean-up operators")
    p.add_argument("input", help="input mask (.nrrd)")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--ops",
        nargs="+",
        required=True,
        help="operators in order: largest[:conn], dilate|erode|close|open[:cross|cube[:r]], smooth[:iters]",
    )
    p.add_argument("--encoding", choices=("raw", "gzip"), default="raw")
    _common_options(p)
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("pipeline", help="run localize-crop-segment-pad on one scan")
    p.add_argument("--scan", required=True)
    p.add_argument("--truth", help="truth mask (oracle components, dice report)")
    p.add_argument("--localizer", choices=("threshold", "oracle", "fixed"), default="threshold")
    p.add_argument("--segmenter", choices=("threshold", "oracle", "external"), default="threshold")
    p.add_argument("--pred-dir", help="external predictions directory")
    p.add_argument("--case-id", help="case id for the external adapter")
    p.add_argument("--roi", default="240,160,96", help="ROI size, default 240,160,96")
    p.add_argument("--downsample-factor", type=int, default=4)
    p.add_argument("--out", required=True, help="output mask (.nrrd)")
    p.add_argument("--encoding", choices=("raw", "gzip"), default="raw")
    _common_options(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("experiment", help="pipeline geometry sweeps")
    exp_sub = p.add_subparsers(dest="experiment")

    pe = exp_sub.add_parser("offset", help="dice vs crop-center displacement")
    pe.add_argument("--scan", required=True)
    pe.add_argument("--truth", required=True)
    pe.add_argument("--segmenter", choices=("oracle", "threshold"), default="oracle")
    pe.add_argument("--offsets", default="0,25,50,75,100,125,150", help="percent offsets")
    pe.add_argument("--axis", choices=("x", "y", "z"), default="x")
    pe.add_argument("--roi", default="240,160,96")
    pe.add_argument("--out", required=True)
    _common_options(pe)
    pe.set_defaults(func=cmd_experiment_offset)

    pp = exp_sub.add_parser("patch-size", help="background share vs patch size")
    pp.add_argument("--scan", required=True)
    pp.add_argument("--truth", required=True)
    pp.add_argument("--sizes", default="400x400,360x360,320x320,280x280,240x160")
    pp.add_argument("--z-extent", type=int, default=96)
    pp.add_argument("--out", required=True)
    _common_options(pp)
    pp.set_defaults(func=cmd_experiment_patch_size)

    p = sub.add_parser("synth", help="write a synthetic phantom cohort")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--dims", default="576,576,88")
    p.add_argument("--spacing", default="0.625")
    p.add_argument("--tier-fractions", default="0.15,0.70,0.15")
    p.add_argument("--encoding", choices=("raw", "gzip"), default="raw")
    _common_options(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) is None:
        parser.print_help(sys.stderr)
        return 1
    if args.command == "experiment" and getattr(args, "experiment", None) is None:
        sys.stderr.write("usage: labench experiment {offset,patch-size} ...\n")
        return 1
    try:
        return args.func(args)
    except LabenchError as exc:
        return _fail(f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    raise SystemExit(main())
