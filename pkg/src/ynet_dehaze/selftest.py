"""Quick invariant suites behind ``ynet selftest``.

Each suite returns ``(passed, total)``. The suites re-check the transform,
weight, SSIM and gradient contracts without needing pytest.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from .dwt import dwt2, idwt2
from .metrics import SsimParams, l2_loss, ssim, ssim_loss
from .wssim import weight_schedule, wssim_loss

FIXTURE_PATH = Path(__file__).with_name("fixtures") / "ssim_reference.json"


def fixture_pair(seed: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Deterministic correlated RGB pair (3, 64, 64) for the SSIM oracle."""
    rng = np.random.default_rng(seed)
    noise = float(0.02 + 0.3 * rng.random())
    x = rng.random((3, 64, 64))
    y = np.clip(x + rng.normal(0.0, noise, size=x.shape), 0.0, 1.0)
    return x, y, noise


def central_difference(f: Callable[[torch.Tensor], torch.Tensor], x: torch.Tensor,
                       eps: float = 1e-4) -> torch.Tensor:
    grad = torch.zeros_like(x)
    flat, gflat = x.view(-1), grad.view(-1)
    with torch.no_grad():
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + eps
            up = f(x).item()
            flat[i] = orig - eps
            down = f(x).item()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * eps)
    return grad


def gradient_error(f, x: torch.Tensor, eps: float = 1e-4) -> float:
    """``max|fd - autograd| / max|autograd|`` at ``x`` (float64 expected)."""
    x = x.detach().clone().requires_grad_(True)
    f(x).backward()
    analytic = x.grad.detach()
    numeric = central_difference(f, x.detach().clone(), eps)
    return float((numeric - analytic).abs().max() / analytic.abs().max().clamp_min(1e-300))


def suite_dwt(rng) -> tuple[int, int]:
    passed = total = 0
    for size in (16, 64, 128):
        for _ in range(4):
            img = rng.random((3, size, size))
            bands = dwt2(img)
            rec = idwt2(bands)
            energy = sum(float((b**2).sum()) for b in bands.as_tuple())
            ok = np.abs(rec - img).max() < 1e-6 and abs(energy - (img**2).sum()) / (img**2).sum() < 1e-6
            passed += ok
            total += 1
    b = dwt2(np.array([[1.0, 2.0], [3.0, 4.0]]))
    passed += bool((b.ll, b.lh, b.hl, b.hh) == (5.0, -1.0, -2.0, 0.0))
    return passed, total + 1


def suite_weights(rng) -> tuple[int, int]:
    passed = total = 0
    for r in np.arange(1, 10) / 10:
        for n in range(1, 6):
            passed += abs(weight_schedule(float(r), n).total - 1.0) < 1e-12
            total += 1
    s = weight_schedule(0.4, 3)
    expected = [(0.24, 0.24, 0.36), (0.0384, 0.0384, 0.0576), (0.006144, 0.006144, 0.009216)]
    got = list(zip(s.w_lh, s.w_hl, s.w_hh))
    passed += bool(np.allclose(got, expected, atol=1e-15, rtol=0) and abs(s.w_ll_final - 0.004096) < 1e-15)
    return passed, total + 1


def suite_ssim(rng) -> tuple[int, int]:
    fixture = json.loads(FIXTURE_PATH.read_text())
    passed = total = 0
    for entry in fixture["pairs"]:
        x, y, _ = fixture_pair(entry["seed"])
        passed += abs(float(ssim(x, y)) - entry["ssim"]) < 1e-6
        total += 1
    x = torch.from_numpy(rng.random((3, 32, 32)))
    passed += abs(float(ssim(x, x)) - 1.0) < 1e-9
    return passed, total + 1


def suite_gradients(rng) -> tuple[int, int]:
    small = SsimParams(window_size=5)
    tiny = SsimParams(window_size=3)
    y8 = torch.from_numpy(rng.random((1, 8, 8)))
    y16 = torch.from_numpy(rng.random((1, 16, 16)))
    x8 = torch.from_numpy(rng.random((1, 8, 8)))
    x16 = torch.from_numpy(rng.random((1, 16, 16)))
    checks = [
        (gradient_error(lambda v: ssim_loss(v, y8, small), x8), 1e-3),
        (gradient_error(lambda v: wssim_loss(v, y16, weight_schedule(0.4, 1), small), x16), 1e-3),
        (gradient_error(lambda v: wssim_loss(v, y16, weight_schedule(0.4, 2), tiny), x16), 1e-3),
        (gradient_error(lambda v: l2_loss(v, y8), x8), 1e-6),
    ]
    return sum(err < tol for err, tol in checks), len(checks)


SUITES = {
    "dwt_round_trip": suite_dwt,
    "weight_normalization": suite_weights,
    "ssim_oracle": suite_ssim,
    "gradient_checks": suite_gradients,
}


def run_all(seed: int = 0, echo=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, suite in SUITES.items():
        passed, total = suite(rng)
        status = "ok" if passed == total else "FAIL"
        echo(f"{name:22s} {passed}/{total} {status}")
        ok &= passed == total
    return ok
