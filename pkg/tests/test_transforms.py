"""Transform grids, warps, JPEG/noise degradations, and dataset generation."""

from __future__ import annotations

import numpy as np
import pytest

from chordcorners import (
    EXPECTED_PER_BASE,
    FAMILIES,
    GrayImage,
    InputError,
    ParameterError,
    TransformSpec,
    add_gaussian_noise,
    apply_geometric,
    apply_transform,
    derive_seed,
    enumerate_specs,
    generate_dataset,
    inverse_map_point,
    jpeg_degrade,
    map_point,
    map_points,
    quantization_table,
    read_manifest,
    read_pgm,
    write_pgm,
)


def _noise_img(seed=3, shape=(24, 31)):
    return GrayImage(np.random.default_rng(seed).uniform(0.0, 1.0, shape))


def test_grid_cardinalities_per_base():
    for family in FAMILIES:
        assert len(enumerate_specs(family)) == EXPECTED_PER_BASE[family]
    with pytest.raises(ParameterError):
        enumerate_specs("perspective")


def test_grids_exclude_stated_identities():
    sx = {s.param_dict["sx"] for s in enumerate_specs("scaling")}
    assert 1.0 not in sx and min(sx) == 0.5 and max(sx) == 2.0
    assert all(s.param_dict["sx"] == s.param_dict["sy"] for s in enumerate_specs("scaling"))
    thetas = {s.param_dict["theta"] for s in enumerate_specs("rotation")}
    assert 0.0 not in thetas and thetas == set(float(t) for t in range(-90, 91, 10)) - {0.0}
    shears = {(s.param_dict["shx"], s.param_dict["shy"]) for s in enumerate_specs("shearing")}
    assert (0.0, 0.0) not in shears and len(shears) == 48
    # the combined grid intentionally keeps its identity member
    idents = [s for s in enumerate_specs("rotation_scale")
              if s.param_dict == {"theta": 0.0, "sx": 1.0, "sy": 1.0}]
    assert len(idents) == 1


def test_identity_spec_maps_points_exactly():
    spec = TransformSpec("rotation_scale",
                         (("sx", 1.0), ("sy", 1.0), ("theta", 0.0))).bind(256, 256)
    np.testing.assert_array_equal(map_point(spec, (10.25, 200.5)), [10.25, 200.5])
    pts = np.array([[0.0, 0.0], [255.0, 255.0], [31.5, 77.25]])
    np.testing.assert_array_equal(map_points(spec, pts), pts)
    assert map_points(spec, np.zeros((0, 2))).shape == (0, 2)


def test_map_point_round_trip():
    rng = np.random.default_rng(21)
    specs = enumerate_specs("rotation_scale") + enumerate_specs("shearing")
    for spec in [specs[i] for i in rng.integers(0, len(specs), 10)]:
        bound = spec.bind(200, 150)
        p = rng.uniform(0, 150, 2)
        np.testing.assert_allclose(inverse_map_point(bound, map_point(bound, p)), p, atol=1e-9)


def test_rotation_90_is_an_exact_permutation():
    img = _noise_img(3, (12, 17))
    spec = TransformSpec("rotation", (("theta", 90.0),)).bind(17, 12)
    out = apply_geometric(img, spec)
    np.testing.assert_allclose(out.pixels, np.rot90(img.pixels, k=-1), atol=1e-12)
    sq = TransformSpec("rotation", (("theta", 90.0),)).bind(256, 256)
    np.testing.assert_allclose(map_point(sq, (0.0, 0.0)), [255.0, 0.0], atol=1e-9)


def test_apply_geometric_binding_rules():
    img = _noise_img()
    spec = TransformSpec("rotation", (("theta", 30.0),))
    assert apply_geometric(img, spec).pixels.shape  # unbound specs bind automatically
    with pytest.raises(InputError):
        apply_geometric(img, spec.bind(99, 99))
    with pytest.raises(ParameterError):
        apply_geometric(img, TransformSpec("jpeg", (("quality", 50.0),)))


def test_scaling_output_size():
    img = _noise_img(5, (40, 60))
    out = apply_geometric(img, TransformSpec("scaling", (("sx", 2.0), ("sy", 2.0))).bind(60, 40))
    assert (out.height, out.width) == (80, 120)


def test_quantization_table_endpoints():
    assert np.all(quantization_table(100) == 1.0)
    assert quantization_table(50)[0, 0] == 16.0  # the unscaled baseline table
    assert np.all(quantization_table(5) >= quantization_table(90))
    with pytest.raises(ParameterError):
        quantization_table(0)


def test_jpeg_quality_ordering():
    img = _noise_img(6, (32, 32))
    gentle = jpeg_degrade(img, 95)
    harsh = jpeg_degrade(img, 5)
    err_gentle = np.abs(gentle.pixels - img.pixels).mean()
    err_harsh = np.abs(harsh.pixels - img.pixels).mean()
    assert err_gentle < err_harsh
    assert err_gentle < 0.02


def test_noise_determinism_and_scale():
    img = GrayImage(np.full((128, 128), 0.5))
    a = add_gaussian_noise(img, 0.01, seed=42)
    b = add_gaussian_noise(img, 0.01, seed=42)
    np.testing.assert_array_equal(a.pixels, b.pixels)
    c = add_gaussian_noise(img, 0.01, seed=43)
    assert np.any(a.pixels != c.pixels)
    assert abs(np.std(a.pixels - img.pixels) - 0.1) < 0.01
    with pytest.raises(ParameterError):
        add_gaussian_noise(img, 0.0, seed=1)


def test_derive_seed_frozen_and_stable():
    assert derive_seed(0, "img", "noise(variance=0.01)") == 166236137603615
    assert derive_seed(0, "img", "noise(variance=0.015)") != 166236137603615
    assert 0 <= derive_seed(5, "a", "b") < 2**48


def test_spec_json_round_trip_and_label():
    spec = TransformSpec("shearing", (("shx", 0.004), ("shy", 0.0))).bind(100, 80)
    again = TransformSpec.from_json(spec.to_json())
    assert again == spec
    assert spec.label == "shearing(shx=0.004,shy=0)"
    with pytest.raises(ParameterError):
        TransformSpec("warp", ())
    with pytest.raises(InputError):
        apply_transform(_noise_img(), TransformSpec("noise", (("variance", 0.01),)))


def test_generate_dataset_smoke_and_manifest_round_trip(tmp_path):
    base = tmp_path / "base.pgm"
    write_pgm(_noise_img(9, (48, 48)), base)
    rows = generate_dataset([("base", base)], tmp_path / "out",
                            families=("rotation", "noise"), seed=0, smoke=True)
    assert [r.family for r in rows] == ["rotation", "noise"]
    assert all((tmp_path / "out" / f"base__{r.family}__000.pgm").exists() for r in rows)
    noise_spec = rows[1].spec
    assert "seed" in noise_spec.param_dict  # bound during generation
    back = read_manifest(tmp_path / "out" / "manifest.csv")
    assert back == rows
    # rendered file really is the spec applied to the base
    img = read_pgm(base)
    expect = apply_transform(img, rows[1].spec)
    got = read_pgm(rows[1].out_path)
    np.testing.assert_allclose(got.pixels, expect.pixels, atol=1.0 / 255.0)


def test_generate_dataset_full_family_count(tmp_path):
    base = tmp_path / "b.pgm"
    write_pgm(_noise_img(10, (16, 16)), base)
    rows = generate_dataset([("b", base)], tmp_path / "d", families=("noise",), seed=1)
    assert len(rows) == EXPECTED_PER_BASE["noise"]
    variances = [r.spec.param_dict["variance"] for r in rows]
    np.testing.assert_allclose(variances, np.arange(1, 11) * 0.005)
    with pytest.raises(ParameterError):
        generate_dataset([("b", base)], tmp_path / "d2", families=("fisheye",))
    with pytest.raises(InputError):
        read_manifest(tmp_path / "missing.csv")
