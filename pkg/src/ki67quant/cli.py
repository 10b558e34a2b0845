"""Command-line driver.

Subcommands:
  analyze   batch-score PNG micrographs, writing CSV and JSON reports and
            optional per-image overlay PNGs
  validate  recompute the embedded reference cohort and report agreement
  synth     generate a synthetic image plus its ground-truth sidecar

Exit codes: 0 success, 1 any analysis/generation failure, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .components import ComponentSet, filter_by_area, label_components
from .config import ConfigError, RunConfig, default_config, load_config
from .index import (
    REPORTED_CORRELATION,
    REPORTED_INDEX_RANGE_PERCENT,
    REPORTED_MEDIAN_TOTAL_CELLS,
    REPORTED_TOTAL_CELLS_RANGE,
    AnalysisReport,
    cohort_summary,
    compute_index,
    format_percent,
    validation_dataset,
)
from .morphology import StructuringElement, erode, opening
from .raster import load_image, save_image
from .segmentation import classify_pixels
from .synthgen import PlacementError, SynthSpec, generate

OVERLAY_POSITIVE_COLOR = (0, 255, 0)
OVERLAY_NEGATIVE_COLOR = (255, 0, 255)

_CSV_HEADER = [
    "image_id",
    "stained_count",
    "unstained_count",
    "stained_area",
    "unstained_area",
    "index_by_count",
    "index_by_area",
    "formatted_percent",
    "error",
]


def analyze_image(image: np.ndarray, config: RunConfig, image_id: str = "image") -> AnalysisReport:
    """Run the full pipeline on one image array."""
    report, _, _ = _analyze_with_components(image, config, image_id)
    return report


def _analyze_with_components(
    image: np.ndarray, config: RunConfig, image_id: str
) -> tuple[AnalysisReport, ComponentSet, ComponentSet]:
    seg = classify_pixels(image, config.thresholds)
    se = config.structuring_element
    cleaned_pos = opening(seg.positive, se, passes=config.morphology_passes)
    cleaned_neg = opening(seg.negative, se, passes=config.morphology_passes)

    cs_pos = filter_by_area(
        label_components(cleaned_pos, config.connectivity), config.min_area, config.max_area
    )
    cs_neg = filter_by_area(
        label_components(cleaned_neg, config.connectivity), config.min_area, config.max_area
    )

    stained_count = cs_pos.count()
    unstained_count = cs_neg.count()
    # Areas are summed over the counted components, so counts and areas
    # describe the same final set of nuclei.
    stained_area = sum(c.area for c in cs_pos.components)
    unstained_area = sum(c.area for c in cs_neg.components)

    index_by_count = compute_index(stained_count, unstained_count)
    report = AnalysisReport(
        image_id=image_id,
        stained_count=stained_count,
        unstained_count=unstained_count,
        stained_area=stained_area,
        unstained_area=unstained_area,
        index_by_count=index_by_count,
        index_by_area=compute_index(stained_area, unstained_area),
        formatted_percent=format_percent(index_by_count),
        no_cells_detected=stained_count == 0 and unstained_count == 0,
    )
    return report, cs_pos, cs_neg


def render_overlay(
    image: np.ndarray, cs_pos: ComponentSet, cs_neg: ComponentSet
) -> np.ndarray:
    """Source image with counted components outlined: positive nuclei in
    green, negative in magenta."""
    se = StructuringElement.square(1)
    out = image.copy()
    for cs, color in ((cs_pos, OVERLAY_POSITIVE_COLOR), (cs_neg, OVERLAY_NEGATIVE_COLOR)):
        mask = cs.label_map > 0
        outline = mask & ~erode(mask, se)
        out[outline] = color
    return out


def run_analysis(paths, config: RunConfig) -> list[AnalysisReport]:
    """Analyze a batch of image files in order.

    A failing image produces a report row carrying its error message and
    never aborts the rest of the batch. Overlays are written alongside the
    reports when enabled.
    """
    reports = []
    for path in paths:
        path = Path(path)
        image_id = path.stem
        try:
            image = load_image(path)
            report, cs_pos, cs_neg = _analyze_with_components(image, config, image_id)
            if config.emit_overlays:
                overlay = render_overlay(image, cs_pos, cs_neg)
                save_image(overlay, config.output_dir / f"{image_id}_overlay.png")
        except (OSError, ValueError) as exc:
            report = AnalysisReport(
                image_id=image_id,
                stained_count=0,
                unstained_count=0,
                stained_area=0,
                unstained_area=0,
                index_by_count=0.0,
                index_by_area=0.0,
                formatted_percent="",
                error=str(exc),
            )
        reports.append(report)
    return reports


def write_csv_report(reports, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for r in reports:
            if r.error is not None:
                writer.writerow([r.image_id, "", "", "", "", "", "", "", r.error])
            else:
                writer.writerow(
                    [
                        r.image_id,
                        r.stained_count,
                        r.unstained_count,
                        r.stained_area,
                        r.unstained_area,
                        f"{r.index_by_count:.6f}",
                        f"{r.index_by_area:.6f}",
                        r.formatted_percent,
                        "",
                    ]
                )


def write_json_report(reports, path) -> None:
    payload = []
    for r in reports:
        if r.error is not None:
            payload.append({"image_id": r.image_id, "error": r.error})
        else:
            payload.append(
                {
                    "image_id": r.image_id,
                    "stained_count": r.stained_count,
                    "unstained_count": r.unstained_count,
                    "stained_area": r.stained_area,
                    "unstained_area": r.unstained_area,
                    "index_by_count": round(r.index_by_count, 6),
                    "index_by_area": round(r.index_by_area, 6),
                    "formatted_percent": r.formatted_percent,
                    "no_cells_detected": r.no_cells_detected,
                    "error": None,
                }
            )
    with Path(path).open("w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _cmd_analyze(args) -> int:
    try:
        config = load_config(args.config) if args.config else default_config()
        if args.out is not None:
            config = replace(config, output_dir=Path(args.out))
        if args.overlays:
            config = replace(config, emit_overlays=True)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    config.output_dir.mkdir(parents=True, exist_ok=True)
    reports = run_analysis(args.images, config)

    csv_path = config.output_dir / "report.csv"
    json_path = config.output_dir / "report.json"
    write_csv_report(reports, csv_path)
    write_json_report(reports, json_path)

    failures = 0
    for r in reports:
        if r.error is not None:
            failures += 1
            print(f"{r.image_id}: ERROR {r.error}")
        else:
            note = " (no cells detected)" if r.no_cells_detected else ""
            print(
                f"{r.image_id}: {r.formatted_percent} "
                f"({r.stained_count} stained / {r.unstained_count} unstained){note}"
            )
    print(f"wrote {csv_path} and {json_path}")
    return 1 if failures else 0


def _cmd_validate(args) -> int:
    records = validation_dataset()
    summary = cohort_summary(records)

    rows = []
    all_match = True
    for rec in records:
        computed = format_percent(compute_index(rec.stained, rec.unstained))
        reported = f"{rec.digital_index_percent:.1f}%"
        match = computed == reported
        all_match &= match
        rows.append((rec, computed, reported, match))

    print("case  stained  unstained  computed  reported  visual  match")
    for rec, computed, reported, match in rows:
        print(
            f"{rec.case_id:>4}  {rec.stained:>7}  {rec.unstained:>9}  "
            f"{computed:>8}  {reported:>8}  {rec.visual_index_percent:>5.1f}%  "
            f"{'ok' if match else 'MISMATCH'}"
        )
    matched = sum(1 for _, _, _, m in rows if m)
    print(f"index agreement: {matched}/{len(rows)}")

    median = summary.median_total_cells
    median_text = f"{median:g}"
    print(
        f"total cells per case: median {median_text}, "
        f"range {summary.min_total_cells} to {summary.max_total_cells}"
    )
    print(
        f"digital index range: {summary.min_index_percent:.1f}% to {summary.max_index_percent:.1f}%"
    )
    delta = summary.pearson_r - REPORTED_CORRELATION
    print(f"pearson r (digital vs visual): {summary.pearson_r:.6f}")
    print(f"previously reported correlation: {REPORTED_CORRELATION}  (delta {delta:+.6f})")

    if args.csv:
        with Path(args.csv).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["case_id", "stained", "unstained", "computed_percent", "reported_percent", "visual_percent", "match"]
            )
            for rec, computed, reported, match in rows:
                writer.writerow(
                    [rec.case_id, rec.stained, rec.unstained, computed, reported,
                     f"{rec.visual_index_percent:.1f}%", str(match).lower()]
                )
        print(f"wrote {args.csv}")

    cohort_ok = (
        median == REPORTED_MEDIAN_TOTAL_CELLS
        and (summary.min_total_cells, summary.max_total_cells) == REPORTED_TOTAL_CELLS_RANGE
        and (summary.min_index_percent, summary.max_index_percent) == REPORTED_INDEX_RANGE_PERCENT
    )
    return 0 if all_match and cohort_ok else 1


def _cmd_synth(args) -> int:
    spec_path = Path(args.spec_file)
    try:
        data = json.loads(spec_path.read_text())
        spec = SynthSpec.from_dict(data)
    except OSError as exc:
        print(f"cannot read spec file {spec_path}: {exc}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, ValueError) as exc:
        print(f"invalid synthetic spec {spec_path}: {exc}", file=sys.stderr)
        return 2

    try:
        truth = generate(spec)
    except PlacementError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid synthetic spec {spec_path}: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        image_path = out_dir / f"{spec_path.stem}.png"
        sidecar_path = out_dir / f"{spec_path.stem}.truth.json"
        save_image(truth.image, image_path)
        with sidecar_path.open("w") as fh:
            json.dump(truth.sidecar_dict(), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        print(f"cannot write outputs to {out_dir}: {exc}", file=sys.stderr)
        return 1

    print(
        f"wrote {image_path} and {sidecar_path} "
        f"({truth.positive_count} positive / {truth.negative_count} negative nuclei)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ki67quant",
        description="Ki-67 proliferation index scoring for immunohistochemistry micrographs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="score a batch of PNG micrographs")
    p_analyze.add_argument("images", nargs="*", help="PNG files to analyze")
    p_analyze.add_argument("--config", help="JSON config file")
    p_analyze.add_argument("--out", help="output directory (overrides config)")
    p_analyze.add_argument(
        "--overlays", action="store_true", help="write per-image outline overlays"
    )
    p_analyze.set_defaults(func=_cmd_analyze)

    p_validate = sub.add_parser(
        "validate", help="recompute the embedded reference cohort and report agreement"
    )
    p_validate.add_argument("--csv", help="also write the comparison table as CSV")
    p_validate.set_defaults(func=_cmd_validate)

    p_synth = sub.add_parser("synth", help="generate a synthetic image with ground truth")
    p_synth.add_argument("spec_file", help="JSON synthetic-image spec")
    p_synth.add_argument("--out", default=".", help="output directory")
    p_synth.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
