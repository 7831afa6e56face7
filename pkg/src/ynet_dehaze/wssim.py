"""Wavelet-weighted SSIM loss and the combined training objectives.

An ``n``-level Haar pyramid splits each image into detail bands per level and
one coarse LL band. With ratio ``r`` a single decomposition shares its weight
as ``LL : LH : HL : HH = r^2 : r(1-r) : r(1-r) : (1-r)^2`` and the LL share
is passed down to the next level, so level ``i`` detail weights carry a
factor ``r^(2(i-1))`` and the final LL weight is ``r^(2n)``. The weights sum
to one, which makes ``wssim_loss(x, x) == -1``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import torch

from .dwt import dwt_pyramid
from .metrics import DEFAULT_SSIM, SsimParams, l2_loss, ssim_loss


class LossVariant(str, enum.Enum):
    L2 = "L2"
    SSIM = "SSIM"
    WSSIM = "WSSIM"
    WSSIM_PLUS_L2 = "WSSIM_PLUS_L2"

    @classmethod
    def parse(cls, value) -> "LossVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(
                f"unknown loss variant {value!r}; expected one of {[v.value for v in cls]}"
            ) from None


ABLATION_ORDER = (LossVariant.L2, LossVariant.SSIM, LossVariant.WSSIM, LossVariant.WSSIM_PLUS_L2)


@dataclass(frozen=True)
class WeightSchedule:
    r: float
    n: int
    w_lh: tuple[float, ...]
    w_hl: tuple[float, ...]
    w_hh: tuple[float, ...]
    w_ll_final: float

    @property
    def total(self) -> float:
        return sum(self.w_lh) + sum(self.w_hl) + sum(self.w_hh) + self.w_ll_final


def weight_schedule(r: float, n: int, literal: bool = False) -> WeightSchedule:
    """Per-level band weights for ratio ``r`` and depth ``n``.

    ``literal=True`` reproduces the printed recurrence ``[x, y, z] *= x``
    with the running ``x``, which squares the LL share each level and does
    not conserve total weight. It exists only for comparison runs.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"ratio r must lie in (0, 1), got {r}")
    if int(n) != n or n < 1:
        raise ValueError(f"depth n must be an integer >= 1, got {n}")
    x, y, z = r * r, r * (1 - r), (1 - r) ** 2
    w_lh, w_hh = [], []
    if literal:
        for _ in range(n):
            w_lh.append(y)
            w_hh.append(z)
            x, y, z = x * x, x * y, x * z
        ll = x
    else:
        for i in range(n):
            scale = (r * r) ** i
            w_lh.append(scale * y)
            w_hh.append(scale * z)
        ll = (r * r) ** n
    return WeightSchedule(r, int(n), tuple(w_lh), tuple(w_lh), tuple(w_hh), ll)


def max_wssim_levels(h: int, w: int, window_size: int) -> int:
    """Deepest pyramid whose smallest band still fits the SSIM window."""
    n = 0
    while h % 2 == 0 and w % 2 == 0 and min(h, w) // 2 >= window_size:
        h, w = h // 2, w // 2
        n += 1
    return n


def wssim_loss(x, y, sched: WeightSchedule, p: SsimParams = DEFAULT_SSIM) -> torch.Tensor:
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    h, w = x.shape[-2:]
    feasible = max_wssim_levels(h, w, p.window_size)
    if sched.n > feasible:
        raise ValueError(
            f"{h}x{w} inputs with a {p.window_size}-pixel SSIM window allow at most "
            f"{feasible} W-SSIM levels, got n={sched.n}"
        )
    px, py = dwt_pyramid(x, sched.n), dwt_pyramid(y, sched.n)
    loss = 0.0
    for i, (bx, by) in enumerate(zip(px.levels, py.levels)):
        loss = loss + sched.w_lh[i] * ssim_loss(bx.lh, by.lh, p)
        loss = loss + sched.w_hl[i] * ssim_loss(bx.hl, by.hl, p)
        loss = loss + sched.w_hh[i] * ssim_loss(bx.hh, by.hh, p)
    return loss + sched.w_ll_final * ssim_loss(px.final_ll, py.final_ll, p)


def total_loss(x, y, sched: WeightSchedule | None, p: SsimParams = DEFAULT_SSIM,
               variant: LossVariant | str = LossVariant.WSSIM_PLUS_L2) -> torch.Tensor:
    variant = LossVariant.parse(variant)
    if variant is LossVariant.L2:
        return l2_loss(x, y)
    if variant is LossVariant.SSIM:
        return ssim_loss(x, y, p)
    if sched is None:
        raise ValueError(f"variant {variant.value} needs a weight schedule")
    if variant is LossVariant.WSSIM:
        return wssim_loss(x, y, sched, p)
    return wssim_loss(x, y, sched, p) + l2_loss(x, y)
