import numpy as np
import pytest
import torch

from ynet_dehaze.trainer import deterministic_mode

deterministic_mode(True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def numeric_grad(f, x, eps=1e-4):
    """Central finite differences of scalar ``f`` at float64 tensor ``x``."""
    x = x.detach().clone()
    g = torch.zeros_like(x)
    xf, gf = x.view(-1), g.view(-1)
    for i in range(xf.numel()):
        v = xf[i].item()
        xf[i] = v + eps
        up = float(f(x))
        xf[i] = v - eps
        down = float(f(x))
        xf[i] = v
        gf[i] = (up - down) / (2 * eps)
    return g


def autograd_grad(f, x):
    x = x.detach().clone().requires_grad_(True)
    f(x).backward()
    return x.grad.detach()


def rel_grad_error(f, x, eps=1e-4):
    ga = autograd_grad(f, x)
    gn = numeric_grad(f, x, eps)
    return float((gn - ga).abs().max() / ga.abs().max())


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
