"""SSIM, SSIM loss, PSNR and mean squared error.

Inputs are torch tensors shaped (C, H, W) or (N, C, H, W); numpy arrays are
converted. Local statistics use a Gaussian window in valid mode, so the SSIM
map is ``window_size - 1`` pixels smaller than the input on each axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

PSNR_CAP = 100.0


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0

    def __post_init__(self):
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd and >= 3, got {self.window_size}")
        if self.sigma <= 0 or self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("sigma, k1 and k2 must be positive")

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2


DEFAULT_SSIM = SsimParams()


def _gaussian_1d(size: int, sigma: float) -> np.ndarray:
    if size % 2 == 0 or size < 1:
        raise ValueError(f"window size must be odd, got {size}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    r = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    return g / g.sum()


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    g = _gaussian_1d(size, sigma)
    k = np.outer(g, g)
    return k / k.sum()


def _as_batch(x) -> torch.Tensor:
    if isinstance(x, np.ndarray):
        x = torch.from_numpy(x)
    if x.ndim == 3:
        x = x[None]
    if x.ndim != 4:
        raise ValueError(f"expected (C, H, W) or (N, C, H, W), got shape {tuple(x.shape)}")
    return x


def _filter(x: torch.Tensor, g: torch.Tensor) -> torch.Tensor:
    # separable valid-mode Gaussian filtering, one group per channel
    c = x.shape[1]
    k = g.numel()
    x = F.conv2d(x, g.view(1, 1, 1, k).expand(c, 1, 1, k), groups=c)
    return F.conv2d(x, g.view(1, 1, k, 1).expand(c, 1, k, 1), groups=c)


def ssim_map(x, y, p: SsimParams = DEFAULT_SSIM) -> torch.Tensor:
    x, y = _as_batch(x), _as_batch(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    h, w = x.shape[-2:]
    if min(h, w) < p.window_size:
        raise ValueError(f"image {h}x{w} is smaller than the {p.window_size}x{p.window_size} SSIM window")
    g = torch.as_tensor(_gaussian_1d(p.window_size, p.sigma), dtype=x.dtype, device=x.device)
    n, c = x.shape[:2]
    stats = _filter(torch.cat([x, y, x * x, y * y, x * y], dim=1), g)
    mu_x, mu_y, exx, eyy, exy = stats.split(c, dim=1)
    var_x = exx - mu_x * mu_x
    var_y = eyy - mu_y * mu_y
    cov = exy - mu_x * mu_y
    num = (2 * mu_x * mu_y + p.c1) * (2 * cov + p.c2)
    den = (mu_x * mu_x + mu_y * mu_y + p.c1) * (var_x + var_y + p.c2)
    return num / den


def ssim(x, y, p: SsimParams = DEFAULT_SSIM) -> torch.Tensor:
    """Mean SSIM over all pixels, channels and batch entries."""
    return ssim_map(x, y, p).mean()


def ssim_loss(x, y, p: SsimParams = DEFAULT_SSIM) -> torch.Tensor:
    return -ssim(x, y, p)


def l2_loss(x, y) -> torch.Tensor:
    x, y = _as_batch(x), _as_batch(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    return torch.mean((x - y) ** 2)


def psnr(x, y, data_range: float = 1.0) -> float:
    """PSNR in dB; identical inputs report the ``PSNR_CAP`` value."""
    mse = float(l2_loss(x, y))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(data_range**2 / mse))
