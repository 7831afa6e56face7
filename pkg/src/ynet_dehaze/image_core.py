"""Image arrays, PNG I/O, resizing/cropping and paired-dataset scanning.

Images are float64 numpy arrays laid out as (channels, height, width) with
intensities in [0, 1]. Channels is 1 (grayscale) or 3 (RGB).
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError

logger = logging.getLogger(__name__)

__all__ = [
    "ImageFormatError",
    "EmptyDatasetError",
    "ImagePair",
    "ScanResult",
    "validate_image",
    "to_rgb",
    "load_image",
    "save_image",
    "to_bytes",
    "resize",
    "random_crop",
    "scan_pairs",
]


class ImageFormatError(ValueError):
    """Raised when a file cannot be decoded as a supported 8-bit raster."""


class EmptyDatasetError(ValueError):
    """Raised when a dataset directory yields no usable images or pairs."""


def validate_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    if not isinstance(img, np.ndarray) or img.ndim != 3:
        raise ValueError(f"{name} must be a (C, H, W) array, got {getattr(img, 'shape', type(img))}")
    c, h, w = img.shape
    if c not in (1, 3):
        raise ValueError(f"{name} must have 1 or 3 channels, got {c}")
    if h < 2 or w < 2:
        raise ValueError(f"{name} must be at least 2x2, got {h}x{w}")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name} contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError(f"{name} values must lie in [0, 1]")
    return img


def to_rgb(img: np.ndarray) -> np.ndarray:
    """Replicate a single-channel image to three channels; RGB passes through."""
    if img.shape[0] == 3:
        return img
    return np.repeat(img, 3, axis=0)


def load_image(path: str | os.PathLike) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I", "F"):
                raise ImageFormatError(f"{path}: only 8-bit images are supported (mode {mode})")
            if mode in ("L", "LA", "1"):
                im = im.convert("L")
            elif mode != "RGB":
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: cannot decode image") from exc
    except OSError as exc:
        raise ImageFormatError(f"{path}: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[None]
    else:
        arr = arr.transpose(2, 0, 1)
    return validate_image(arr.astype(np.float64) / 255.0, str(path))


def to_bytes(img: np.ndarray) -> np.ndarray:
    """Quantize to uint8 with round-half-up, clamped to [0, 255]."""
    q = np.floor(np.asarray(img, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(q, 0, 255).astype(np.uint8)


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write ``img`` as an 8-bit PNG (grayscale or RGB by channel count)."""
    validate_image(img)
    q = to_bytes(img)
    arr = q[0] if q.shape[0] == 1 else q.transpose(1, 2, 0)
    path = Path(path)
    try:
        Image.fromarray(arr).save(path, format="PNG")
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def resize(img: np.ndarray, h: int, w: int) -> np.ndarray:
    """Bilinear resize with half-pixel centres (align_corners=False)."""
    if h < 2 or w < 2:
        raise ValueError(f"target size must be at least 2x2, got {h}x{w}")
    if img.shape[1:] == (h, w):
        return img.copy()
    t = torch.from_numpy(np.ascontiguousarray(img, dtype=np.float64))[None]
    out = F.interpolate(t, size=(h, w), mode="bilinear", align_corners=False)
    # interpolation is a convex combination, clip only guards rounding
    return np.clip(out[0].numpy(), 0.0, 1.0)


def random_crop(img: np.ndarray, size: int, seed: int) -> np.ndarray:
    _, h, w = img.shape
    if size < 1 or size > min(h, w):
        raise ValueError(f"crop size {size} does not fit image {h}x{w}")
    rng = np.random.default_rng(seed)
    top = int(rng.integers(0, h - size + 1))
    left = int(rng.integers(0, w - size + 1))
    return img[:, top:top + size, left:left + size].copy()


@dataclass
class ImagePair:
    hazy: np.ndarray
    clear: np.ndarray
    id: str

    def __post_init__(self):
        if self.hazy.shape != self.clear.shape:
            raise ValueError(
                f"pair {self.id!r}: hazy {self.hazy.shape} and clear {self.clear.shape} differ"
            )


@dataclass
class ScanResult:
    """Pairs found by :func:`scan_pairs` plus human-readable rejection notes."""

    pairs: list[ImagePair]
    warnings: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]


def _png_names(d: Path) -> set[str]:
    return {p.name for p in d.iterdir() if p.is_file() and p.suffix.lower() == ".png"}


def scan_pairs(hazy_dir: str | os.PathLike, clear_dir: str | os.PathLike) -> ScanResult:
    """Pair ``hazy_dir/<name>.png`` with ``clear_dir/<name>.png``.

    Pairs come back in lexicographic filename order. Pairs whose shapes differ
    are dropped and listed in ``ScanResult.warnings``.
    """
    hazy_dir, clear_dir = Path(hazy_dir), Path(clear_dir)
    for d in (hazy_dir, clear_dir):
        if not d.is_dir():
            raise FileNotFoundError(f"no such directory: {d}")
    common = sorted(_png_names(hazy_dir) & _png_names(clear_dir))
    if not common:
        raise EmptyDatasetError(f"no matching filenames between {hazy_dir} and {clear_dir}")
    pairs, warnings = [], []
    for name in common:
        hazy = load_image(hazy_dir / name)
        clear = load_image(clear_dir / name)
        if hazy.shape != clear.shape:
            msg = f"{name}: shape mismatch hazy {hazy.shape} vs clear {clear.shape}"
            logger.warning(msg)
            warnings.append(msg)
            continue
        pairs.append(ImagePair(hazy=hazy, clear=clear, id=Path(name).stem))
    return ScanResult(pairs, warnings)
