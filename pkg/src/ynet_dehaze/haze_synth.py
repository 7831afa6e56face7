"""Synthetic haze from the atmospheric scattering model.

A hazy observation is ``I = J * t + A * (1 - t)`` with transmission
``t = exp(-beta * d)`` for a homogeneous atmosphere.
"""
from __future__ import annotations

import os
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .image_core import EmptyDatasetError, load_image, resize, save_image, validate_image

DEPTH_KINDS = ("ramp", "radial", "smooth_noise")
MANIFEST_HEADER = ("name", "beta", "atmospheric_light", "depth_kind", "sub_seed")


@dataclass(frozen=True)
class HazeParams:
    beta: float
    atmospheric_light: float | tuple[float, float, float] = 1.0

    def __post_init__(self):
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        a = np.atleast_1d(np.asarray(self.atmospheric_light, dtype=np.float64))
        if a.size not in (1, 3) or np.any(a < 0) or np.any(a > 1):
            raise ValueError(f"atmospheric light must be a scalar or 3-vector in [0, 1], got {self.atmospheric_light}")


def transmission(depth: np.ndarray, beta: float) -> np.ndarray:
    depth = np.asarray(depth, dtype=np.float64)
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if depth.ndim != 2 or np.any(depth < 0) or not np.all(np.isfinite(depth)):
        raise ValueError("depth must be a 2-D array of finite, nonnegative values")
    return np.exp(-beta * depth)


def _light_vector(A, channels: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(A, dtype=np.float64))
    if a.size == 1:
        a = np.repeat(a, channels)
    if a.size != channels:
        raise ValueError(f"atmospheric light has {a.size} components for a {channels}-channel image")
    if np.any(a < 0) or np.any(a > 1):
        raise ValueError("atmospheric light components must lie in [0, 1]")
    return a[:, None, None]


def apply_haze(clear: np.ndarray, t: np.ndarray, A) -> np.ndarray:
    """Blend ``clear`` toward the atmospheric light ``A`` by transmission ``t``."""
    t = np.asarray(t, dtype=np.float64)
    if t.shape != clear.shape[1:]:
        raise ValueError(f"transmission shape {t.shape} does not match image {clear.shape[1:]}")
    a = _light_vector(A, clear.shape[0])
    return clear * t[None] + a * (1.0 - t[None])


def gen_depth(kind: str, h: int, w: int, seed: int = 0, d_max: float = 3.0) -> np.ndarray:
    if h < 2 or w < 2:
        raise ValueError(f"depth map must be at least 2x2, got {h}x{w}")
    if kind == "ramp":
        row = np.linspace(0.0, d_max, w)
        return np.broadcast_to(row, (h, w)).copy()
    if kind == "radial":
        yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        r = np.hypot(yy - cy, xx - cx)
        return d_max * r / r.max()
    if kind == "smooth_noise":
        rng = np.random.default_rng(seed)
        coarse = rng.random((1, 4, 4))
        field = resize(coarse, h, w)[0]
        lo, hi = field.min(), field.max()
        return d_max * (field - lo) / (hi - lo)
    raise ValueError(f"unknown depth kind {kind!r}; expected one of {DEPTH_KINDS}")


def _clear_files(clear_dir: Path) -> list[Path]:
    exts = {".png"}
    return sorted(p for p in clear_dir.iterdir() if p.is_file() and p.suffix.lower() in exts)


def synthesize_dataset(
    clear_dir: str | os.PathLike,
    out_dir: str | os.PathLike,
    beta_range: Sequence[float] = (0.4, 1.6),
    A_range: Sequence[float] = (0.7, 1.0),
    seed: int = 0,
    d_max: float = 3.0,
    per_channel_light: bool = False,
    size: int | None = None,
) -> int:
    """Write hazy/clear PNG pairs plus ``manifest.tsv`` under ``out_dir``.

    Each image gets its own generator seeded from ``(seed, index)`` so the
    draws do not depend on processing order. When ``size`` is given the clear
    image is resized to ``size x size`` first and written in resized form.
    """
    clear_dir, out_dir = Path(clear_dir), Path(out_dir)
    files = _clear_files(clear_dir) if clear_dir.is_dir() else []
    if not files:
        raise EmptyDatasetError(f"no PNG images in {clear_dir}")
    (out_dir / "hazy").mkdir(parents=True, exist_ok=True)
    (out_dir / "clear").mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(MANIFEST_HEADER)]
    for index, src in enumerate(files):
        sub_seed = int(np.random.SeedSequence([seed, index]).generate_state(1)[0])
        rng = np.random.default_rng(sub_seed)
        beta = float(rng.uniform(*beta_range))
        n_light = 3 if per_channel_light else 1
        light = rng.uniform(A_range[0], A_range[1], size=n_light)
        kind = DEPTH_KINDS[int(rng.integers(len(DEPTH_KINDS)))]
        clear = load_image(src)
        if size is not None:
            clear = resize(clear, size, size)
        if per_channel_light and clear.shape[0] == 1:
            light = light[:1]
        depth = gen_depth(kind, clear.shape[1], clear.shape[2], seed=sub_seed, d_max=d_max)
        hazy = apply_haze(clear, transmission(depth, beta), light)
        validate_image(hazy, "hazy")
        name = src.stem + ".png"
        save_image(hazy, out_dir / "hazy" / name)
        if size is None:
            shutil.copyfile(src, out_dir / "clear" / name)
        else:
            save_image(clear, out_dir / "clear" / name)
        light_txt = ",".join(f"{v:.6f}" for v in light)
        lines.append(f"{name}\t{beta:.6f}\t{light_txt}\t{kind}\t{sub_seed}")
    (out_dir / "manifest.tsv").write_text("\n".join(lines) + "\n")
    return len(files)


def read_manifest(path: str | os.PathLike) -> list[dict]:
    rows = Path(path).read_text().strip().splitlines()
    header = rows[0].split("\t")
    out = []
    for line in rows[1:]:
        rec = dict(zip(header, line.split("\t")))
        rec["beta"] = float(rec["beta"])
        rec["atmospheric_light"] = tuple(float(v) for v in rec["atmospheric_light"].split(","))
        rec["sub_seed"] = int(rec["sub_seed"])
        out.append(rec)
    return out
