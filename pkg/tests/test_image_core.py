import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from ynet_dehaze.image_core import (
    EmptyDatasetError, ImageFormatError, ImagePair, load_image, random_crop, resize,
    save_image, scan_pairs, to_bytes, to_rgb,
)


def _write_png(path, arr):
    Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(path)


def test_load_maps_bytes_to_unit_interval(tmp_path):
    _write_png(tmp_path / "a.png", [[0, 128], [255, 7]])
    img = load_image(tmp_path / "a.png")
    assert img.shape == (1, 2, 2)
    assert img[0, 0, 0] == 0.0
    assert img[0, 1, 0] == 1.0
    assert img[0, 0, 1] == pytest.approx(128 / 255, abs=0)


def test_load_rgb_layout(tmp_path):
    arr = np.zeros((3, 4, 3), np.uint8)
    arr[..., 1] = 255
    _write_png(tmp_path / "g.png", arr)
    img = load_image(tmp_path / "g.png")
    assert img.shape == (3, 3, 4)
    assert np.all(img[1] == 1.0) and np.all(img[0] == 0.0)


def test_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "missing.png")
    (tmp_path / "junk.png").write_bytes(b"not an image at all")
    with pytest.raises(ImageFormatError):
        load_image(tmp_path / "junk.png")


def test_save_rounding_rule(tmp_path):
    img = np.array([[[1.0, 0.5], [0.0, 127.4 / 255]]])
    assert to_bytes(img).tolist() == [[[255, 128], [0, 127]]]
    save_image(img, tmp_path / "o.png")
    assert np.asarray(Image.open(tmp_path / "o.png")).tolist() == [[255, 128], [0, 127]]


def test_save_unwritable(tmp_path):
    with pytest.raises(OSError):
        save_image(np.zeros((3, 4, 4)), tmp_path / "no" / "such" / "dir.png")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 3]), st.integers(2, 12), st.integers(2, 12))
def test_round_trip_quantization_bound(tmp_path_factory, seed, c, h, w):
    img = np.random.default_rng(seed).random((c, h, w))
    path = tmp_path_factory.mktemp("rt") / "x.png"
    save_image(img, path)
    back = load_image(path)
    assert back.shape == img.shape
    assert np.abs(back - img).max() <= 1 / 510 + 1e-12


def test_resize_identity_and_constant(rng):
    img = rng.random((3, 5, 7))
    assert np.array_equal(resize(img, 5, 7), img)
    const = np.full((3, 5, 7), 0.3)
    out = resize(const, 11, 4)
    assert out.shape == (3, 11, 4)
    np.testing.assert_allclose(out, 0.3, atol=1e-15)


def test_resize_hand_evaluated():
    # half-pixel centres: source x = (j + 0.5) * 2/4 - 0.5 = -0.25, 0.25, 0.75, 1.25,
    # clamped to [0, 1] -> values 0, 0.25, 0.75, 1
    img = np.array([[[0.0, 1.0], [0.0, 1.0]]])
    out = resize(img, 2, 4)
    np.testing.assert_allclose(out[0], [[0, 0.25, 0.75, 1.0]] * 2, atol=1e-15)


def test_resize_range_and_errors(rng):
    out = resize(rng.random((3, 9, 9)), 31, 17)
    assert out.min() >= 0 and out.max() <= 1
    with pytest.raises(ValueError):
        resize(rng.random((3, 9, 9)), 0, 4)


def test_random_crop(rng):
    img = rng.random((3, 10, 12))
    assert np.array_equal(random_crop(img[:, :10, :10], 10, seed=3), img[:, :10, :10])
    assert np.array_equal(random_crop(img, 4, seed=5), random_crop(img, 4, seed=5))
    crops = {random_crop(img, 4, seed=s).tobytes() for s in range(100)}
    assert len(crops) > 1
    with pytest.raises(ValueError):
        random_crop(img, 11, seed=0)


def test_to_rgb():
    g = np.full((1, 2, 2), 0.25)
    assert to_rgb(g).shape == (3, 2, 2)
    assert to_rgb(np.zeros((3, 2, 2))).shape == (3, 2, 2)


def _dataset(tmp_path, hazy_names, clear_names, shapes=None):
    shapes = shapes or {}
    for sub, names in (("hazy", hazy_names), ("clear", clear_names)):
        (tmp_path / sub).mkdir()
        for n in names:
            shape = shapes.get((sub, n), (4, 4, 3))
            _write_png(tmp_path / sub / n, np.full(shape, 100))
    return tmp_path / "hazy", tmp_path / "clear"


def test_scan_pairs_order(tmp_path):
    h, c = _dataset(tmp_path, ["b.png", "a.png"], ["a.png", "b.png"])
    result = scan_pairs(h, c)
    assert [p.id for p in result] == ["a", "b"]
    assert result.warnings == []


def test_scan_pairs_empty(tmp_path):
    h, c = _dataset(tmp_path, ["a.png"], ["b.png"])
    with pytest.raises(EmptyDatasetError):
        scan_pairs(h, c)


def test_scan_pairs_shape_mismatch(tmp_path):
    h, c = _dataset(tmp_path, ["a.png", "b.png"], ["a.png", "b.png"],
                    shapes={("clear", "b.png"): (6, 4, 3)})
    result = scan_pairs(h, c)
    assert [p.id for p in result] == ["a"]
    assert len(result.warnings) == 1 and "b.png" in result.warnings[0]


def test_image_pair_shape_check():
    with pytest.raises(ValueError):
        ImagePair(np.zeros((3, 4, 4)), np.zeros((3, 4, 6)), "x")
