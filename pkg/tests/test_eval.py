"""Matching, repeatability metrics, the experiment runner, and report output."""

from __future__ import annotations

import math

import numpy as np

from chordcorners import (
    CornerMatch,
    DetectorParams,
    ManifestRow,
    TransformSpec,
    average_repeatability,
    localization_error,
    make_polygon,
    match_corners,
    run_experiment,
    summarize,
    write_pgm,
    write_report,
)


def test_average_repeatability_identities():
    assert average_repeatability(10, 10, 10) == 100.0
    assert average_repeatability(1, 2, 2) == 50.0
    assert average_repeatability(0, 5, 7) == 0.0
    assert average_repeatability(0, 0, 3) is None
    assert average_repeatability(0, 3, 0) is None


def test_localization_error_identities():
    assert localization_error([]) is None
    matches = match_corners([(0.0, 0.0)], [(1.0, 1.0)], radius=3.0)
    assert len(matches) == 1
    assert abs(localization_error(matches) - math.sqrt(2.0)) < 1e-12
    mixed = [CornerMatch(0, 0, 1.0), CornerMatch(1, 1, 3.0)]
    assert localization_error(mixed) == math.sqrt(5.0)


def test_match_corners_greedy_and_one_to_one():
    # equidistant pair resolves by test index
    m = match_corners([(0.0, 0.0)], [(1.0, 0.0), (0.0, 1.0)])
    assert [(x.index_ref, x.index_test) for x in m] == [(0, 0)]
    # and by ref index when the tie is on that side
    m = match_corners([(0.0, 0.0), (2.0, 0.0)], [(1.0, 0.0)])
    assert [(x.index_ref, x.index_test) for x in m] == [(0, 0)]
    # one-to-one: a consumed test corner cannot match again
    m = match_corners([(0.0, 0.0), (0.5, 0.0)], [(0.0, 0.0)])
    assert len(m) == 1 and m[0].index_ref == 0 and m[0].distance == 0.0
    assert match_corners([(0.0, 0.0)], [(5.0, 0.0)]) == []
    assert match_corners([], [(1.0, 1.0)]) == []


def _identity_row(tmp_path, fixture_id="sq"):
    fx = make_polygon(4, 65.0, fixture_id=fixture_id)
    base = tmp_path / f"{fixture_id}.pgm"
    write_pgm(fx.image, base)
    spec = TransformSpec(
        "rotation_scale", (("sx", 1.0), ("sy", 1.0), ("theta", 0.0))
    ).bind(256, 256)
    return ManifestRow(fixture_id, "rotation_scale", spec, str(base), str(base))


def test_run_experiment_identity_transform_is_perfect(tmp_path):
    row = _identity_row(tmp_path)
    result = run_experiment([row])
    assert len(result.items) == 2  # one per detector
    for item in result.items:
        assert item.error == ""
        assert item.repeatability == 100.0
        assert item.loc_error == 0.0
        assert item.n_ref == item.n_test == item.n_matched == 4
    assert result.summary["sqrt_ratio_sca_over_cpda"] > 0
    assert result.original_counts["sca"]["sq"] == 4


def test_run_experiment_isolates_item_failures(tmp_path):
    good = _identity_row(tmp_path)
    missing = ManifestRow("sq", "jpeg", TransformSpec("jpeg", (("quality", 50.0),)),
                          good.base_path, str(tmp_path / "gone.pgm"))
    result = run_experiment([good, missing])
    assert len(result.items) == 4
    errs = [it for it in result.items if it.error]
    assert len(errs) == 2 and all(it.label == "jpeg(quality=50)" for it in errs)
    assert len(result.failures) == 2
    ok = [it for it in result.items if not it.error]
    assert all(it.repeatability == 100.0 for it in ok)


def test_run_experiment_parallel_matches_sequential(tmp_path):
    fx = make_polygon(4, 65.0, fixture_id="sq")
    base = tmp_path / "sq.pgm"
    write_pgm(fx.image, base)
    from chordcorners import generate_dataset

    rows = generate_dataset([("sq", base)], tmp_path / "d",
                            families=("rotation", "jpeg"), smoke=True)
    seq = run_experiment(rows, jobs=1)
    par = run_experiment(rows, jobs=2)
    assert seq.items == par.items
    assert {d: (c.sqrt_evals, c.distance_evals) for d, c in seq.counters.items()} == \
           {d: (c.sqrt_evals, c.distance_evals) for d, c in par.counters.items()}


def test_summarize_and_write_report_determinism(tmp_path):
    row = _identity_row(tmp_path)
    result = run_experiment([row], detectors={"sca": DetectorParams.sca()})
    summary = summarize(result)
    det = summary["detectors"]["sca"]
    assert det["average_repeatability"] == 100.0
    assert det["families"]["rotation_scale"]["n_items"] == 1
    assert "sqrt_ratio_sca_over_cpda" not in summary  # needs both detectors

    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    files1 = write_report(out1, result)
    files2 = write_report(out2, result)
    names1 = [p.name for p in files1]
    assert names1 == [p.name for p in files2]
    assert "items.csv" in names1 and "summary.json" in names1
    assert "family_rotation_scale.csv" in names1
    for a, b in zip(files1, files2):
        assert a.read_bytes() == b.read_bytes()
