import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ynet_dehaze.haze_synth import (
    HazeParams, apply_haze, gen_depth, read_manifest, synthesize_dataset, transmission,
)
from ynet_dehaze.image_core import EmptyDatasetError, load_image, save_image


def test_transmission_cases():
    d = np.array([[0.0, 1.0], [2.0, math.log(2)]])
    assert np.all(transmission(d, 0.0) == 1.0)
    t = transmission(d, 1.0)
    assert t[0, 0] == 1.0
    assert t[1, 1] == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        transmission(d, -0.1)


@given(st.floats(0, 3), st.floats(0, 3), st.floats(0, 5))
def test_transmission_monotone(b1, b2, depth):
    lo, hi = sorted((b1, b2))
    d = np.array([[depth, depth + 0.5]])
    assert np.all(transmission(d, lo) >= transmission(d, hi))
    assert transmission(d, hi)[0, 0] >= transmission(d, hi)[0, 1]
    assert np.all(transmission(d, hi) > 0)


def test_apply_haze_cases(rng):
    clear = rng.random((3, 4, 5))
    assert np.array_equal(apply_haze(clear, np.ones((4, 5)), 0.8), clear)
    near_zero = apply_haze(clear, np.full((4, 5), 1e-12), 0.7)
    np.testing.assert_allclose(near_zero, 0.7, atol=1e-11)
    one = apply_haze(np.full((1, 2, 2), 0.8), np.full((2, 2), 0.5), 1.0)
    np.testing.assert_allclose(one, 0.9, atol=1e-15)
    with pytest.raises(ValueError):
        apply_haze(clear, np.ones((4, 4)), 0.8)


def test_apply_haze_with_light_equal_to_scene(rng):
    clear = np.full((3, 6, 6), 0.75)
    t = rng.random((6, 6))
    np.testing.assert_allclose(apply_haze(clear, t, 0.75), clear, atol=1e-15)


def test_per_channel_light():
    clear = np.zeros((3, 2, 2))
    out = apply_haze(clear, np.zeros((2, 2)), (0.1, 0.5, 0.9))
    assert out[:, 0, 0].tolist() == [0.1, 0.5, 0.9]


def test_convex_bounds_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(100):
        clear = rng.random((3, 8, 8))
        p = HazeParams(float(rng.uniform(0, 2)), float(rng.uniform(0, 1)))
        depth = gen_depth(str(rng.choice(["ramp", "radial", "smooth_noise"])), 8, 8, int(rng.integers(1 << 30)))
        hazy = apply_haze(clear, transmission(depth, p.beta), p.atmospheric_light)
        a = p.atmospheric_light
        assert np.all(hazy >= np.minimum(clear, a) - 1e-15)
        assert np.all(hazy <= np.maximum(clear, a) + 1e-15)


def test_haze_params_validation():
    with pytest.raises(ValueError):
        HazeParams(-1.0)
    with pytest.raises(ValueError):
        HazeParams(1.0, 1.5)


def test_depth_kinds():
    ramp = gen_depth("ramp", 5, 7)
    assert np.all(ramp[:, 0] == 0) and ramp.max() == pytest.approx(3.0)
    radial = gen_depth("radial", 7, 9, d_max=2.0)
    assert radial[3, 4] == 0 and radial.max() == pytest.approx(2.0)
    a = gen_depth("smooth_noise", 16, 16, seed=4)
    assert np.array_equal(a, gen_depth("smooth_noise", 16, 16, seed=4))
    assert not np.array_equal(a, gen_depth("smooth_noise", 16, 16, seed=5))
    assert a.min() == pytest.approx(0.0) and a.max() == pytest.approx(3.0)
    with pytest.raises(ValueError):
        gen_depth("fractal", 4, 4)


def _clear_dir(path, n, rng):
    path.mkdir()
    for i in range(n):
        save_image(rng.random((3, 16, 16)), path / f"img{i:02d}.png")
    return path


def test_synthesize_counts_and_manifest(tmp_path, rng):
    src = _clear_dir(tmp_path / "src", 10, rng)
    n = synthesize_dataset(src, tmp_path / "out", seed=3)
    assert n == 10
    assert len(list((tmp_path / "out" / "hazy").glob("*.png"))) == 10
    assert len(list((tmp_path / "out" / "clear").glob("*.png"))) == 10
    rows = read_manifest(tmp_path / "out" / "manifest.tsv")
    assert len(rows) == 10
    assert all(0.4 <= r["beta"] <= 1.6 for r in rows)
    assert all(0.7 <= r["atmospheric_light"][0] <= 1.0 for r in rows)
    assert {r["depth_kind"] for r in rows} <= {"ramp", "radial", "smooth_noise"}


def test_synthesize_beta_zero_is_identity(tmp_path, rng):
    src = _clear_dir(tmp_path / "src", 3, rng)
    synthesize_dataset(src, tmp_path / "out", beta_range=(0.0, 0.0), seed=1)
    for p in sorted((tmp_path / "out" / "hazy").glob("*.png")):
        hazy = load_image(p)
        clear = load_image(tmp_path / "out" / "clear" / p.name)
        assert np.abs(hazy - clear).max() <= 1 / 510


def test_synthesize_deterministic(tmp_path, rng):
    src = _clear_dir(tmp_path / "src", 4, rng)
    synthesize_dataset(src, tmp_path / "a", seed=9)
    synthesize_dataset(src, tmp_path / "b", seed=9)
    for p in sorted((tmp_path / "a").rglob("*")):
        if p.is_file():
            assert p.read_bytes() == (tmp_path / "b" / p.relative_to(tmp_path / "a")).read_bytes()


def test_synthesize_empty(tmp_path):
    (tmp_path / "empty").mkdir()
    with pytest.raises(EmptyDatasetError):
        synthesize_dataset(tmp_path / "empty", tmp_path / "out")
