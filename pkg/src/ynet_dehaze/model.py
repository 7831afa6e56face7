"""Y-net: a U-net style encoder/decoder whose multi-scale decoder maps are
upsampled to full resolution and fused by one 1x1 convolution.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
import torch.nn as nn
import torch.nn.functional as F


class ConfigError(ValueError):
    pass


@dataclass
class YNetConfig:
    num_scales: int = 4
    encoder_channels: list[int] = field(default_factory=lambda: [16, 32, 64, 128])
    decoder_channels: list[int] = field(default_factory=lambda: [64, 32, 16])
    agg_include_bottleneck: bool = True
    input_channels: int = 3
    output_channels: int = 3

    def validate(self) -> "YNetConfig":
        if self.num_scales < 2:
            raise ConfigError(f"num_scales must be >= 2, got {self.num_scales}")
        if len(self.encoder_channels) != self.num_scales:
            raise ConfigError(
                f"encoder_channels needs {self.num_scales} entries, got {len(self.encoder_channels)}"
            )
        if len(self.decoder_channels) != self.num_scales - 1:
            raise ConfigError(
                f"decoder_channels needs {self.num_scales - 1} entries, got {len(self.decoder_channels)}"
            )
        if any(c < 1 for c in (*self.encoder_channels, *self.decoder_channels)):
            raise ConfigError("channel counts must be positive")
        return self

    @property
    def divisor(self) -> int:
        return 2 ** (self.num_scales - 1)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "YNetConfig":
        return cls(**d).validate()


def _conv3(cin, cout, stride=1):
    return nn.Conv2d(cin, cout, 3, stride=stride, padding=1)


class DoubleConv(nn.Sequential):
    def __init__(self, cin, cout):
        super().__init__(_conv3(cin, cout), nn.ReLU(inplace=True), _conv3(cout, cout), nn.ReLU(inplace=True))


class YNet(nn.Module):
    """Encoder stages joined by strided 3x3 convs, a bilinear-upsampling
    decoder with concatenated skips, and a 1x1 aggregation head.

    The aggregation head sees, in order, the decoder outputs from coarsest to
    finest and then (optionally) the bottleneck, all resized to input size.
    """

    def __init__(self, config: YNetConfig):
        super().__init__()
        self.config = config.validate()
        enc, dec = config.encoder_channels, config.decoder_channels
        self.enc = nn.ModuleList()
        self.down = nn.ModuleList()
        self.enc.append(DoubleConv(config.input_channels, enc[0]))
        for s in range(1, config.num_scales):
            self.down.append(nn.Sequential(_conv3(enc[s - 1], enc[s], stride=2), nn.ReLU(inplace=True)))
            self.enc.append(DoubleConv(enc[s], enc[s]))
        self.dec = nn.ModuleList()
        prev = enc[-1]
        for j, c in enumerate(dec):
            skip = enc[config.num_scales - 2 - j]
            self.dec.append(DoubleConv(prev + skip, c))
            prev = c
        self.branch_channels = list(dec) + ([enc[-1]] if config.agg_include_bottleneck else [])
        self.aggregate = nn.Conv2d(sum(self.branch_channels), config.output_channels, 1)

    def branch_slices(self) -> list[slice]:
        """Input-channel slices of the aggregation conv, one per fused branch."""
        out, start = [], 0
        for c in self.branch_channels:
            out.append(slice(start, start + c))
            start += c
        return out

    def features(self, x: torch.Tensor) -> list[torch.Tensor]:
        """Multi-scale maps fed to the aggregation head, at native resolution."""
        h, w = x.shape[-2:]
        d = self.config.divisor
        if h % d or w % d:
            raise ValueError(f"input {h}x{w} must have height and width divisible by {d}")
        skips = []
        f = self.enc[0](x)
        for s in range(1, self.config.num_scales):
            skips.append(f)
            f = self.enc[s](self.down[s - 1](f))
        bottleneck = f
        branches = []
        for block in self.dec:
            skip = skips.pop()
            f = F.interpolate(f, size=skip.shape[-2:], mode="bilinear", align_corners=False)
            f = block(torch.cat([f, skip], dim=1))
            branches.append(f)
        if self.config.agg_include_bottleneck:
            branches.append(bottleneck)
        return branches

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        squeeze = x.ndim == 3
        if squeeze:
            x = x[None]
        h, w = x.shape[-2:]
        # A 1x1 conv commutes with bilinear upsampling (interpolation weights
        # sum to one), so each branch is projected at its own resolution and
        # only the 3-channel projections are upsampled.
        weight, bias = self.aggregate.weight, self.aggregate.bias
        out = None
        for b, sl in zip(self.features(x), self.branch_slices()):
            proj = F.conv2d(b, weight[:, sl])
            if proj.shape[-2:] != (h, w):
                proj = F.interpolate(proj, size=(h, w), mode="bilinear", align_corners=False)
            out = proj if out is None else out + proj
        out = torch.sigmoid(out + bias.view(1, -1, 1, 1))
        return out[0] if squeeze else out

    def forward_concat(self, x: torch.Tensor) -> torch.Tensor:
        """Reference head: upsample every branch, concatenate, 1x1 conv."""
        h, w = x.shape[-2:]
        up = [F.interpolate(b, size=(h, w), mode="bilinear", align_corners=False)
              if b.shape[-2:] != (h, w) else b for b in self.features(x)]
        return torch.sigmoid(self.aggregate(torch.cat(up, dim=1)))


def build(config: YNetConfig | None = None, seed: int = 0) -> YNet:
    """Construct a Y-net with He-uniform (fan-in) weights and zero biases."""
    config = config or YNetConfig()
    model = YNet(config)
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for m in model.modules():
            if isinstance(m, nn.Conv2d):
                fan_in = m.in_channels * m.kernel_size[0] * m.kernel_size[1]
                bound = (6.0 / fan_in) ** 0.5
                m.weight.copy_(torch.rand(m.weight.shape, generator=gen) * 2 * bound - bound)
                m.bias.zero_()
    return model


def count_params(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def expected_param_count(config: YNetConfig) -> int:
    """Closed-form parameter count for ``config``; kernels plus biases."""
    config.validate()
    enc, dec = config.encoder_channels, config.decoder_channels

    def conv(cin, cout, k):
        return k * k * cin * cout + cout

    total = conv(config.input_channels, enc[0], 3) + conv(enc[0], enc[0], 3)
    for s in range(1, config.num_scales):
        total += conv(enc[s - 1], enc[s], 3) + 2 * conv(enc[s], enc[s], 3)
    prev = enc[-1]
    for j, c in enumerate(dec):
        total += conv(prev + enc[config.num_scales - 2 - j], c, 3) + conv(c, c, 3)
        prev = c
    agg_in = sum(dec) + (enc[-1] if config.agg_include_bottleneck else 0)
    return total + conv(agg_in, config.output_channels, 1)


class IdentityModel(nn.Module):
    """Stand-in dehazer that returns its input; used for baselines."""

    config = None

    def forward(self, x):
        return x


def save_checkpoint(path: str | os.PathLike, model: YNet, extra: dict | None = None) -> None:
    payload = {"model_config": model.config.to_json(), "params": model.state_dict()}
    payload.update(extra or {})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str | os.PathLike) -> tuple[YNet, dict]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such checkpoint: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if "model_config" not in payload or "params" not in payload:
        raise ValueError(f"{path} is not a Y-net checkpoint")
    config = YNetConfig.from_dict(json.loads(payload["model_config"]))
    model = YNet(config)
    model.load_state_dict(payload["params"])
    model.eval()
    return model, payload
