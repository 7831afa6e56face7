"""PSNR/SSIM evaluation reports and single-image inference."""
from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .image_core import ImagePair, load_image, resize, save_image, to_rgb
from .metrics import psnr, ssim
from .model import IdentityModel, load_checkpoint

logger = logging.getLogger(__name__)

REPORT_HEADER = ("id", "psnr", "ssim")


@dataclass
class EvalReport:
    rows: list[tuple[str, float, float]] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([r[1] for r in self.rows]))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r[2] for r in self.rows]))

    def write_tsv(self, path: str | os.PathLike) -> None:
        lines = [f"# {k}={v}" for k, v in sorted(self.metadata.items())]
        lines.append("\t".join(REPORT_HEADER))
        lines += [f"{i}\t{p:.17g}\t{s:.17g}" for i, p, s in self.rows]
        lines.append(f"mean\t{self.mean_psnr:.17g}\t{self.mean_ssim:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read_tsv(cls, path: str | os.PathLike) -> "EvalReport":
        report = cls()
        for line in Path(path).read_text().splitlines():
            if line.startswith("# "):
                k, _, v = line[2:].partition("=")
                report.metadata[k] = v
                continue
            parts = line.split("\t")
            if tuple(parts) == REPORT_HEADER or parts[0] == "mean":
                continue
            report.rows.append((parts[0], float(parts[1]), float(parts[2])))
        return report


def _divisor(model: nn.Module) -> int:
    config = getattr(model, "config", None)
    return config.divisor if config is not None else 1


def _run(model: nn.Module, img: np.ndarray) -> np.ndarray:
    x = torch.from_numpy(np.ascontiguousarray(to_rgb(img))).float()[None]
    with torch.no_grad():
        y = model(x)
    return y[0].double().numpy()


def evaluate_model(model: nn.Module, pairs: Sequence[ImagePair]) -> EvalReport:
    """Score ``model(hazy)`` against ``clear`` for each pair, in dataset order.

    Images whose size the network cannot take are resized (both sides) to the
    nearest smaller valid size, with a logged warning.
    """
    was_training = model.training
    model.eval()
    d = _divisor(model)
    report = EvalReport()
    for pair in pairs:
        hazy, clear = to_rgb(pair.hazy), to_rgb(pair.clear)
        _, h, w = hazy.shape
        if h % d or w % d:
            nh, nw = max(d, h // d * d), max(d, w // d * d)
            logger.warning("%s: %dx%d not divisible by %d, resized to %dx%d", pair.id, h, w, d, nh, nw)
            hazy, clear = resize(hazy, nh, nw), resize(clear, nh, nw)
        out = torch.from_numpy(_run(model, hazy))
        ref = torch.from_numpy(clear)
        report.rows.append((pair.id, psnr(out, ref), float(ssim(out, ref))))
    model.train(was_training)
    return report


def config_hash(payload: dict) -> str:
    text = payload.get("model_config", "") + payload.get("train_config", "")
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def load_dehazer(checkpoint: str | os.PathLike | None) -> tuple[nn.Module, dict]:
    """Load a checkpoint; ``None`` or ``"identity"`` gives the pass-through model."""
    if checkpoint is None or str(checkpoint) == "identity":
        return IdentityModel(), {"checkpoint": "identity", "config_hash": "identity"}
    model, payload = load_checkpoint(checkpoint)
    return model, {"checkpoint": str(checkpoint), "config_hash": config_hash(payload)}


def evaluate(checkpoint, pairs: Sequence[ImagePair], dataset: str = "") -> EvalReport:
    model, meta = load_dehazer(checkpoint)
    report = evaluate_model(model, pairs)
    report.metadata.update(meta)
    if dataset:
        report.metadata["dataset"] = dataset
    return report


def _pad_amounts(size: int, d: int) -> tuple[int, int]:
    total = (-size) % d
    return total // 2, total - total // 2


def dehaze_array(model: nn.Module, img: np.ndarray) -> np.ndarray:
    """Run the model on any-sized image: reflect-pad to the divisor, crop back."""
    d = _divisor(model)
    x = torch.from_numpy(np.ascontiguousarray(to_rgb(img))).float()[None]
    _, _, h, w = x.shape
    top, bottom = _pad_amounts(h, d)
    left, right = _pad_amounts(w, d)
    if top or bottom or left or right:
        mode = "reflect" if max(top, bottom) < h and max(left, right) < w else "replicate"
        x = F.pad(x, (left, right, top, bottom), mode=mode)
    model.eval()
    with torch.no_grad():
        y = model(x)
    y = y[0, :, top:top + h, left:left + w]
    return np.clip(y.double().numpy(), 0.0, 1.0)


def dehaze(checkpoint, image_path: str | os.PathLike, out_path: str | os.PathLike) -> None:
    model, _ = load_dehazer(checkpoint)
    save_image(dehaze_array(model, load_image(image_path)), out_path)


def write_gallery(model: nn.Module, pairs: Sequence[ImagePair], out_dir: str | os.PathLike) -> None:
    """Save ``hazy | dehazed | clear`` strips, one PNG per pair."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for pair in pairs:
        hazy, clear = to_rgb(pair.hazy), to_rgb(pair.clear)
        strip = np.concatenate([hazy, dehaze_array(model, hazy), clear], axis=2)
        save_image(strip, out_dir / f"{pair.id}.png")
