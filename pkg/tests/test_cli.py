import csv
import json
from pathlib import Path

import numpy as np
from PIL import Image

from ki67quant import SynthSpec, default_config, generate, load_image, save_image, validation_dataset
from ki67quant.cli import main, render_overlay, _analyze_with_components


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data))
    return path


def read_csv(path: Path):
    with path.open() as fh:
        return list(csv.reader(fh))


def make_synth_image(tmp_path: Path, name: str, **spec_kwargs) -> tuple[Path, dict]:
    spec_path = write_json(tmp_path / f"{name}.json", spec_kwargs)
    out_dir = tmp_path / f"{name}_out"
    assert main(["synth", str(spec_path), "--out", str(out_dir)]) == 0
    sidecar = json.loads((out_dir / f"{name}.truth.json").read_text())
    return out_dir / f"{name}.png", sidecar


def test_synth_writes_image_and_sidecar(tmp_path):
    image_path, sidecar = make_synth_image(
        tmp_path, "small", width=160, height=120, positive_count=4, negative_count=9, seed=12
    )
    assert image_path.exists()
    assert sidecar["positive_count"] == 4
    assert sidecar["negative_count"] == 9
    assert len(sidecar["disks"]) == 13
    img = load_image(image_path)
    assert img.shape == (120, 160, 3)


def test_synth_analyze_roundtrip(tmp_path, capsys):
    image_path, sidecar = make_synth_image(
        tmp_path, "five_seven", width=200, height=160, positive_count=5, negative_count=7,
        seed=77, jitter=8,
    )
    out_dir = tmp_path / "analysis"
    assert main(["analyze", str(image_path), "--out", str(out_dir)]) == 0
    rows = read_csv(out_dir / "report.csv")
    assert rows[0] == [
        "image_id", "stained_count", "unstained_count", "stained_area", "unstained_area",
        "index_by_count", "index_by_area", "formatted_percent", "error",
    ]
    assert len(rows) == 2
    row = rows[1]
    assert row[0] == "five_seven"
    assert int(row[1]) == sidecar["positive_count"] == 5
    assert int(row[2]) == sidecar["negative_count"] == 7
    # 5/12 truncates to 41.6 (rounding would give 41.7).
    assert row[7] == "41.6%"
    payload = json.loads((out_dir / "report.json").read_text())
    assert payload[0]["formatted_percent"] == "41.6%"
    assert payload[0]["no_cells_detected"] is False
    assert payload[0]["error"] is None


def test_analyze_empty_image_list(tmp_path):
    out_dir = tmp_path / "empty"
    assert main(["analyze", "--out", str(out_dir)]) == 0
    rows = read_csv(out_dir / "report.csv")
    assert len(rows) == 1  # header only
    assert json.loads((out_dir / "report.json").read_text()) == []


def test_analyze_isolates_per_image_failures(tmp_path, capsys):
    good_path, _ = make_synth_image(
        tmp_path, "good", width=120, height=90, positive_count=3, negative_count=4, seed=5
    )
    corrupt = tmp_path / "corrupt.png"
    corrupt.write_text("this is not a png")
    out_dir = tmp_path / "mixed"
    exit_code = main(["analyze", str(corrupt), str(good_path), "--out", str(out_dir)])
    assert exit_code == 1
    rows = read_csv(out_dir / "report.csv")
    assert len(rows) == 3  # header + one row per input, failures included
    assert rows[1][0] == "corrupt"
    assert "not a PNG" in rows[1][8]
    assert rows[1][1] == ""
    assert rows[2][0] == "good"
    assert rows[2][8] == ""
    payload = json.loads((out_dir / "report.json").read_text())
    assert "error" in payload[0] and "not a PNG" in payload[0]["error"]


def test_analyze_reports_are_byte_identical_across_runs(tmp_path):
    image_path, _ = make_synth_image(
        tmp_path, "det", width=150, height=150, positive_count=6, negative_count=11,
        seed=21, jitter=10,
    )
    out_a = tmp_path / "run_a"
    out_b = tmp_path / "run_b"
    assert main(["analyze", str(image_path), "--out", str(out_a)]) == 0
    assert main(["analyze", str(image_path), "--out", str(out_b)]) == 0
    assert (out_a / "report.csv").read_bytes() == (out_b / "report.csv").read_bytes()
    assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()


def test_overlays_written_with_source_dimensions(tmp_path):
    image_path, _ = make_synth_image(
        tmp_path, "ovl", width=180, height=140, positive_count=4, negative_count=6, seed=9
    )
    out_dir = tmp_path / "overlay_run"
    assert main(["analyze", str(image_path), "--out", str(out_dir), "--overlays"]) == 0
    overlay_path = out_dir / "ovl_overlay.png"
    assert overlay_path.exists()
    with Image.open(overlay_path) as img:
        img.verify()  # valid PNG for external viewers
    overlay = load_image(overlay_path)
    source = load_image(image_path)
    assert overlay.shape == source.shape
    # Outline colors present for both classes.
    assert (overlay == np.array([0, 255, 0], dtype=np.uint8)).all(axis=2).any()
    assert (overlay == np.array([255, 0, 255], dtype=np.uint8)).all(axis=2).any()


def test_render_overlay_outlines_counted_components():
    truth = generate(SynthSpec(width=100, height=80, positive_count=2, negative_count=3, seed=33))
    config = default_config()
    _, cs_pos, cs_neg = _analyze_with_components(truth.image, config, "x")
    overlay = render_overlay(truth.image, cs_pos, cs_neg)
    assert overlay.shape == truth.image.shape
    # The source image is untouched outside the outlines.
    green = (overlay == np.array([0, 255, 0], dtype=np.uint8)).all(axis=2)
    magenta = (overlay == np.array([255, 0, 255], dtype=np.uint8)).all(axis=2)
    outside = ~(green | magenta)
    assert np.array_equal(overlay[outside], truth.image[outside])


def test_no_cells_detected_flag(tmp_path):
    blank = np.full((32, 32, 3), 255, dtype=np.uint8)
    path = tmp_path / "blank.png"
    save_image(blank, path)
    out_dir = tmp_path / "blank_out"
    assert main(["analyze", str(path), "--out", str(out_dir)]) == 0
    payload = json.loads((out_dir / "report.json").read_text())
    assert payload[0]["no_cells_detected"] is True
    assert payload[0]["formatted_percent"] == "0.0%"
    assert payload[0]["index_by_count"] == 0.0


def test_analyze_respects_config_file_and_flag_precedence(tmp_path):
    image_path, _ = make_synth_image(
        tmp_path, "pref", width=120, height=100, positive_count=2, negative_count=3, seed=44
    )
    config_dir = tmp_path / "from_config"
    config_path = write_json(tmp_path / "cfg.json", {"output_dir": str(config_dir)})
    # File value used when no flag is given.
    assert main(["analyze", str(image_path), "--config", str(config_path)]) == 0
    assert (config_dir / "report.csv").exists()
    # Flag overrides the file.
    flag_dir = tmp_path / "from_flag"
    assert main(["analyze", str(image_path), "--config", str(config_path), "--out", str(flag_dir)]) == 0
    assert (flag_dir / "report.csv").exists()


def test_analyze_bad_config_exits_2(tmp_path):
    config_path = write_json(tmp_path / "bad.json", {"min_areas": 3})
    assert main(["analyze", "--config", str(config_path)]) == 2


def test_synth_invalid_spec_exits_2(tmp_path):
    bad = write_json(tmp_path / "bad.json", {"width": 10})
    assert main(["synth", str(bad), "--out", str(tmp_path)]) == 2
    not_json = tmp_path / "nope.json"
    not_json.write_text("{")
    assert main(["synth", str(not_json), "--out", str(tmp_path)]) == 2
    assert main(["synth", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2


def test_synth_too_dense_exits_1(tmp_path, capsys):
    dense = write_json(
        tmp_path / "dense.json",
        {"width": 40, "height": 40, "positive_count": 60, "negative_count": 60},
    )
    assert main(["synth", str(dense), "--out", str(tmp_path)]) == 1
    assert "placement" in capsys.readouterr().err


def test_validate_passes(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "index agreement: 10/10" in out
    assert "median 2449" in out
    assert "range 1161 to 2882" in out
    assert "0.3% to 33.4%" in out
    assert "0.977263" in out
    assert "0.95127" in out
    assert "delta" in out


def test_validate_writes_csv(tmp_path, capsys):
    csv_path = tmp_path / "validation.csv"
    assert main(["validate", "--csv", str(csv_path)]) == 0
    rows = read_csv(csv_path)
    assert rows[0] == [
        "case_id", "stained", "unstained", "computed_percent", "reported_percent",
        "visual_percent", "match",
    ]
    assert len(rows) == 11
    assert rows[1][:5] == ["1", "77", "1883", "3.9%", "3.9%"]
    assert all(row[6] == "true" for row in rows[1:])


def test_pipeline_suppresses_single_pixel_specks():
    # A lone stained pixel is noise: the default opening erases it, so only
    # the real nucleus is counted. With morphology and the area floor
    # disabled, the speck is counted as a second nucleus.
    from dataclasses import replace

    truth = generate(SynthSpec(width=120, height=100, positive_count=1, negative_count=0, seed=3))
    image = truth.image.copy()
    image[5, 5] = (140, 90, 50)  # isolated positive speck far from the disk

    config = default_config()
    report = _analyze_with_components(image, config, "speck")[0]
    assert report.stained_count == 1

    raw_config = replace(config, morphology_passes=0, min_area=0)
    raw_report = _analyze_with_components(image, raw_config, "speck")[0]
    assert raw_report.stained_count == 2


def test_batch_reconstructs_all_reference_percentages(tmp_path):
    # One synthetic image per reference case with the exact count pair; the
    # batch report's formatted percentages must match the digital row.
    records = validation_dataset()
    paths = []
    for rec in records:
        truth = generate(
            SynthSpec(
                width=576, height=576,
                positive_count=rec.stained, negative_count=rec.unstained,
                radius_range=(2, 2), seed=9000 + rec.case_id,
            )
        )
        path = tmp_path / f"case{rec.case_id:02d}.png"
        save_image(truth.image, path)
        paths.append(path)

    config_path = write_json(tmp_path / "cfg.json", {"min_area": 5})
    out_dir = tmp_path / "batch"
    args = ["analyze", *map(str, paths), "--config", str(config_path), "--out", str(out_dir)]
    assert main(args) == 0
    rows = read_csv(out_dir / "report.csv")[1:]
    assert len(rows) == 10
    for row, rec in zip(rows, records):
        assert int(row[1]) == rec.stained
        assert int(row[2]) == rec.unstained
        assert row[7] == f"{rec.digital_index_percent:.1f}%"
