"""Command-line verbs: detect, synth, transform, evaluate, sweep."""

from __future__ import annotations

import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from chordcorners import GrayImage, make_polygon, write_pgm
from chordcorners.cli import main


@pytest.fixture()
def square_pgm(tmp_path):
    path = tmp_path / "square.pgm"
    write_pgm(make_polygon(4, 65.0).image, path)
    return path


def test_missing_subcommand_exits(capsys):
    with pytest.raises(SystemExit):
        main([])


def test_detect_writes_csv_per_detector(square_pgm, tmp_path, capsys):
    out = tmp_path / "corners"
    assert main(["detect", str(square_pgm), "--out", str(out)]) == 0
    for det in ("cpda", "sca"):
        path = out / f"square.{det}.corners.csv"
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x", "y", "curvature", "curve_id", "t_junction"]
        assert len(rows) == 5  # four corners of the square
    assert "square" in capsys.readouterr().out


def test_detect_json_format_and_detector_choice(square_pgm, tmp_path):
    out = tmp_path / "j"
    assert main(["detect", str(square_pgm), "--out", str(out),
                 "--detector", "sca", "--format", "json"]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == ["square.sca.corners.json"]
    payload = json.loads((out / files[0]).read_text())
    assert payload["detector"] == "sca" and len(payload["corners"]) == 4


def test_detect_blank_image_writes_header_only(tmp_path):
    blank = tmp_path / "blank.pgm"
    write_pgm(GrayImage(np.full((64, 64), 0.5)), blank)
    out = tmp_path / "o"
    assert main(["detect", str(blank), "--out", str(out)]) == 0
    lines = (out / "blank.sca.corners.csv").read_text().splitlines()
    assert lines == ["x,y,curvature,curve_id,t_junction"]


def test_detect_exit_codes_for_missing_inputs(square_pgm, tmp_path):
    out = tmp_path / "e"
    assert main(["detect", str(tmp_path / "nope.pgm"), "--out", str(out)]) == 2
    assert (out / "diagnostics.txt").exists()
    out2 = tmp_path / "e2"
    code = main(["detect", str(square_pgm), str(tmp_path / "nope.pgm"), "--out", str(out2)])
    assert code == 1
    assert "nope.pgm" in (out2 / "diagnostics.txt").read_text()


def test_config_file_and_unknown_key(square_pgm, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"detector": "sca", "format": "json"}))
    out = tmp_path / "c"
    assert main(["detect", str(square_pgm), "--config", str(cfg), "--out", str(out)]) == 0
    assert [p.name for p in out.iterdir()] == ["square.sca.corners.json"]

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"detektor": "sca"}))
    assert main(["detect", str(square_pgm), "--config", str(bad), "--out", str(out)]) == 2
    notjson = tmp_path / "broken.json"
    notjson.write_text("{nope")
    assert main(["detect", str(square_pgm), "--config", str(notjson), "--out", str(out)]) == 2


def test_synth_writes_corpus_and_ground_truth(tmp_path, capsys):
    out = tmp_path / "corpus"
    assert main(["synth", "--out", str(out)]) == 0
    pgms = sorted(out.glob("*.pgm"))
    assert len(pgms) == 23
    with open(out / "ground_truth.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["fixture_id"] for r in rows} <= {p.stem for p in pgms}
    assert all(r["shape_kind"] != "blob_no_corners" for r in rows)  # blobs have no rows
    assert "23 fixtures" in capsys.readouterr().out


def test_transform_then_evaluate(tmp_path, square_pgm, capsys):
    bases = tmp_path / "bases"
    bases.mkdir()
    write_pgm(make_polygon(4, 65.0).image, bases / "sq.pgm")
    data = tmp_path / "data"
    assert main(["transform", "--bases", str(bases), "--out", str(data),
                 "--families", "rotation,jpeg", "--smoke"]) == 0
    assert (data / "manifest.csv").exists()

    report = tmp_path / "report"
    assert main(["evaluate", "--manifest", str(data / "manifest.csv"),
                 "--out", str(report)]) == 0
    assert (report / "items.csv").exists()
    assert (report / "summary.json").exists()
    assert (report / "family_rotation.csv").exists()
    summary = json.loads((report / "summary.json").read_text())
    assert set(summary["detectors"]) == {"cpda", "sca"}
    assert "repeatability" in capsys.readouterr().out


def test_transform_empty_dir_exits_2(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    assert main(["transform", "--bases", str(empty), "--out", str(tmp_path / "x")]) == 2


def test_evaluate_reruns_are_byte_identical(tmp_path):
    bases = tmp_path / "bases"
    bases.mkdir()
    write_pgm(make_polygon(4, 65.0).image, bases / "sq.pgm")
    data = tmp_path / "data"
    main(["transform", "--bases", str(bases), "--out", str(data),
          "--families", "noise,jpeg", "--smoke", "--seed", "7"])
    r1, r2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["evaluate", "--manifest", str(data / "manifest.csv"),
                 "--out", str(r1), "--seed", "7"]) == 0
    assert main(["evaluate", "--manifest", str(data / "manifest.csv"),
                 "--out", str(r2), "--seed", "7"]) == 0
    for path in sorted(r1.iterdir()):
        assert path.read_bytes() == (r2 / path.name).read_bytes()


def test_sweep_smoke_single_family(tmp_path, capsys):
    out = tmp_path / "sweep"
    assert main(["sweep", "--out", str(out), "--families", "jpeg", "--smoke"]) == 0
    assert len(list((out / "fixtures").glob("*.pgm"))) == 23
    assert (out / "dataset" / "manifest.csv").exists()
    assert (out / "report" / "summary.json").exists()


def test_module_entry_point(square_pgm, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "chordcorners.cli", "detect", str(square_pgm),
         "--out", str(tmp_path / "m"), "--detector", "sca"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert (tmp_path / "m" / "square.sca.corners.csv").exists()
