"""Orthonormal 2-D Haar wavelet transform on the last two axes.

Band naming: the first letter is the filter applied along rows, the second
along columns. ``lh`` responds to vertical edges, ``hl`` to horizontal ones.
Everything is plain tensor arithmetic, so gradients flow through the
transform. Numpy arrays are accepted and returned as numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
import torch

Array = Union[torch.Tensor, np.ndarray]

# 2x2 correlation kernels, rows = (top, bottom), cols = (left, right)
HAAR_KERNELS = {
    "ll": np.array([[1.0, 1.0], [1.0, 1.0]]) / 2,
    "lh": np.array([[1.0, -1.0], [1.0, -1.0]]) / 2,
    "hl": np.array([[1.0, 1.0], [-1.0, -1.0]]) / 2,
    "hh": np.array([[1.0, -1.0], [-1.0, 1.0]]) / 2,
}


@dataclass
class WaveletBands:
    ll: Array
    lh: Array
    hl: Array
    hh: Array

    def __post_init__(self):
        shapes = {tuple(b.shape) for b in (self.ll, self.lh, self.hl, self.hh)}
        if len(shapes) != 1:
            raise ValueError(f"wavelet bands must share one shape, got {sorted(shapes)}")

    def as_tuple(self):
        return self.ll, self.lh, self.hl, self.hh


@dataclass
class WaveletPyramid:
    levels: list[WaveletBands]

    @property
    def final_ll(self) -> Array:
        return self.levels[-1].ll

    def __len__(self):
        return len(self.levels)


def _as_tensor(x: Array) -> tuple[torch.Tensor, bool]:
    if isinstance(x, np.ndarray):
        return torch.from_numpy(x), True
    return x, False


def dwt2(img: Array) -> WaveletBands:
    x, was_numpy = _as_tensor(img)
    if x.ndim < 2:
        raise ValueError("dwt2 needs at least a 2-D input")
    h, w = x.shape[-2:]
    if h % 2 or w % 2:
        raise ValueError(f"dwt2 needs even height and width, got {h}x{w}")
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    bands = ((a + b + c + d) / 2, (a - b + c - d) / 2, (a + b - c - d) / 2, (a - b - c + d) / 2)
    if was_numpy:
        bands = tuple(t.numpy() for t in bands)
    return WaveletBands(*bands)


def idwt2(bands: WaveletBands) -> Array:
    ll, was_numpy = _as_tensor(bands.ll)
    lh, hl, hh = (_as_tensor(b)[0] for b in (bands.lh, bands.hl, bands.hh))
    if not (ll.shape == lh.shape == hl.shape == hh.shape):
        raise ValueError("wavelet band shapes differ")
    a = (ll + lh + hl + hh) / 2
    b = (ll - lh + hl - hh) / 2
    c = (ll + lh - hl - hh) / 2
    d = (ll - lh - hl + hh) / 2
    *lead, h, w = ll.shape
    top = torch.stack((a, b), dim=-1).reshape(*lead, h, 2 * w)
    bottom = torch.stack((c, d), dim=-1).reshape(*lead, h, 2 * w)
    out = torch.stack((top, bottom), dim=-2).reshape(*lead, 2 * h, 2 * w)
    return out.numpy() if was_numpy else out


def max_levels(h: int, w: int) -> int:
    """Largest n such that both ``h`` and ``w`` are divisible by 2**n."""
    n = 0
    while h % 2 == 0 and w % 2 == 0 and h > 1 and w > 1:
        h //= 2
        w //= 2
        n += 1
    return n


def dwt_pyramid(img: Array, n: int) -> WaveletPyramid:
    if n < 1:
        raise ValueError(f"pyramid depth must be >= 1, got {n}")
    h, w = img.shape[-2:]
    feasible = max_levels(h, w)
    if n > feasible:
        raise ValueError(
            f"a {h}x{w} image supports at most {feasible} DWT levels, {n} requested"
        )
    levels = []
    ll = img
    for _ in range(n):
        bands = dwt2(ll)
        levels.append(bands)
        ll = bands.ll
    return WaveletPyramid(levels)
