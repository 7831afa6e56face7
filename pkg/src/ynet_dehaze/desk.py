"""Desk-scale experiment: a small clear-image corpus, synthetic haze, and the
train/evaluate protocol used by the acceptance suite and ``scripts/``.

Clear images are random crops of the sample photographs bundled with
scikit-image. Training and held-out crops come from disjoint source images.
"""
from __future__ import annotations

import dataclasses
import logging
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import skimage.data

from .evaluate import EvalReport, evaluate, evaluate_model
from .haze_synth import synthesize_dataset
from .image_core import ImagePair, resize, save_image, scan_pairs
from .model import IdentityModel
from .trainer import TrainConfig, train

logger = logging.getLogger(__name__)

TRAIN_SOURCES = ("astronaut", "coffee", "rocket", "immunohistochemistry", "motorcycle",
                 "camera", "brick", "grass", "gravel", "moon")
VAL_SOURCES = ("chelsea", "coins")


def _source(name: str) -> np.ndarray:
    if name == "motorcycle":
        arr = skimage.data.stereo_motorcycle()[0]
    else:
        arr = getattr(skimage.data, name)()
    arr = arr.astype(np.float64) / 255.0
    if arr.ndim == 2:
        arr = np.repeat(arr[None], 3, axis=0)
    else:
        arr = arr[..., :3].transpose(2, 0, 1)
    return arr


def write_clear_crops(out_dir: str | Path, sources: Sequence[str], count: int, size: int,
                      seed: int, prefix: str) -> list[Path]:
    """Write ``count`` random ``size x size`` crops spread evenly over ``sources``.

    Each source is first downscaled so its short side is ``2 * size``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    images = []
    for name in sources:
        img = _source(name)
        _, h, w = img.shape
        scale = 2 * size / min(h, w)
        images.append(resize(img, max(size, round(h * scale)), max(size, round(w * scale))))
    paths = []
    for k in range(count):
        img = images[k % len(images)]
        _, h, w = img.shape
        top = int(rng.integers(0, h - size + 1))
        left = int(rng.integers(0, w - size + 1))
        crop = img[:, top:top + size, left:left + size]
        if rng.random() < 0.5:
            crop = crop[:, :, ::-1]
        path = out_dir / f"{prefix}{k:04d}.png"
        save_image(np.ascontiguousarray(crop), path)
        paths.append(path)
    return paths


@dataclass
class DeskData:
    root: Path
    train: list[ImagePair]
    val: list[ImagePair]


def build_desk_dataset(root: str | Path, n_train: int = 200, n_val: int = 20, size: int = 96,
                       beta_range=(0.4, 1.6), A_range=(0.7, 1.0), seed: int = 0) -> DeskData:
    """Create (or reuse) clear crops and their hazy versions under ``root``."""
    root = Path(root)
    for split, sources, count, off in (("train", TRAIN_SOURCES, n_train, 0),
                                       ("val", VAL_SOURCES, n_val, 1)):
        pairs_dir = root / split
        if not (pairs_dir / "manifest.tsv").exists():
            clear_src = root / f"{split}_source"
            write_clear_crops(clear_src, sources, count, size, seed=seed * 2 + off, prefix=split)
            synthesize_dataset(clear_src, pairs_dir, beta_range, A_range, seed=seed * 2 + off)
    train_pairs = scan_pairs(root / "train" / "hazy", root / "train" / "clear").pairs
    val_pairs = scan_pairs(root / "val" / "hazy", root / "val" / "clear").pairs
    return DeskData(root, train_pairs, val_pairs)


def desk_config(**overrides) -> TrainConfig:
    """Desk protocol: 96x96 crops, batch 8, 400 steps, lr 1e-4, r = 0.4, 3 levels."""
    cfg = TrainConfig(learning_rate=1e-4, batch_size=8, iterations=400, image_size=96,
                      loss_variant="WSSIM_PLUS_L2", r=0.4, dwt_levels=3, seed=0)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg.validate()


@dataclass
class DeskRun:
    variant: str
    seed: int
    report: EvalReport
    losses: list[float] = field(default_factory=list)
    checkpoint: Path | None = None


def run_desk(data: DeskData, out_dir: str | Path, variants=("WSSIM_PLUS_L2", "L2"),
             seeds=(0, 1, 2), **overrides) -> tuple[EvalReport, list[DeskRun]]:
    """Train each (variant, seed) on the shared split; return hazy baseline and runs."""
    out_dir = Path(out_dir)
    baseline = evaluate_model(IdentityModel(), data.val)
    runs = []
    for variant in variants:
        for seed in seeds:
            cfg = desk_config(loss_variant=variant, seed=seed, **overrides)
            run_dir = out_dir / f"{variant}_seed{seed}"
            ckpt, log = train(cfg, data.train, (), run_dir)
            report = evaluate(ckpt, data.val, dataset=str(data.root / "val"))
            report.write_tsv(run_dir / "eval.tsv")
            logger.info("%s seed %d: psnr %.3f ssim %.4f", variant, seed, report.mean_psnr, report.mean_ssim)
            runs.append(DeskRun(variant, seed, report, log.losses, ckpt))
    return baseline, runs


def median_metric(runs: Sequence[DeskRun], variant: str, metric: str) -> float:
    vals = [getattr(r.report, f"mean_{metric}") for r in runs if r.variant == variant]
    return statistics.median(vals)
