"""Adam training loop with loss-variant selection, checkpoints and resume.

One iteration is one optimizer step on one batch. Batch composition is a
pure function of ``(seed, iteration)``: each epoch draws a fresh permutation
from ``default_rng([seed, epoch])`` and batches wrap across epoch borders.
That is what makes a resumed run reproduce an uninterrupted one exactly.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .image_core import EmptyDatasetError, ImagePair, resize, to_rgb
from .metrics import DEFAULT_SSIM
from .model import YNet, YNetConfig, build, load_checkpoint, save_checkpoint
from .wssim import LossVariant, max_wssim_levels, total_loss, weight_schedule

logger = logging.getLogger(__name__)

# fields that may differ between a checkpoint and a resumed run
_RESUME_FREE = {"iterations", "checkpoint_every", "eval_every"}


class NonFiniteLossError(RuntimeError):
    pass


class ConfigMismatchError(ValueError):
    pass


def deterministic_mode(enabled: bool | None = None) -> bool:
    """Switch torch to single-threaded deterministic kernels.

    With ``enabled=None`` the ``YNET_DETERMINISTIC`` environment variable decides.
    """
    if enabled is None:
        enabled = os.environ.get("YNET_DETERMINISTIC", "0") not in ("", "0", "false")
    if enabled:
        torch.use_deterministic_algorithms(True)
        torch.set_num_threads(1)
    return enabled


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 32
    iterations: int = 400
    image_size: int = 480
    loss_variant: str = "WSSIM_PLUS_L2"
    r: float = 0.4
    dwt_levels: int = 3
    seed: int = 0
    checkpoint_every: int = 0
    eval_every: int = 0
    grad_clip: float = 0.0
    literal_alg1_weights: bool = False
    model: YNetConfig = field(default_factory=YNetConfig)

    def validate(self) -> "TrainConfig":
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.iterations < 1:
            raise ValueError("batch_size and iterations must be >= 1")
        self.loss_variant = LossVariant.parse(self.loss_variant).value
        self.model.validate()
        div = 2 ** max(self.model.num_scales - 1, self.dwt_levels)
        if self.image_size % div:
            raise ValueError(f"image_size {self.image_size} must be divisible by {div}")
        if self.uses_wssim:
            weight_schedule(self.r, self.dwt_levels)
            feasible = max_wssim_levels(self.image_size, self.image_size, DEFAULT_SSIM.window_size)
            if self.dwt_levels > feasible:
                raise ValueError(
                    f"image_size {self.image_size} supports at most {feasible} W-SSIM levels"
                )
        return self

    @property
    def uses_wssim(self) -> bool:
        return self.loss_variant in (LossVariant.WSSIM.value, LossVariant.WSSIM_PLUS_L2.value)

    def schedule(self):
        if not self.uses_wssim:
            return None
        return weight_schedule(self.r, self.dwt_levels, literal=self.literal_alg1_weights)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        model = d.pop("model", {})
        if isinstance(model, dict):
            model = YNetConfig(**model)
        return cls(model=model, **d)


def _field_types(cls) -> dict[str, type]:
    hints = {"int": int, "float": float, "str": str, "bool": bool, "list[int]": list}
    return {f.name: hints.get(f.type if isinstance(f.type, str) else f.type.__name__, str)
            for f in dataclasses.fields(cls)}


def _coerce(kind: type, text: str):
    text = text.strip()
    if kind is bool:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is list:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    return kind(text)


def config_fields() -> dict[str, type]:
    """Flat key -> type map covering TrainConfig and its nested YNetConfig."""
    out = _field_types(TrainConfig)
    out.pop("model")
    out.update(_field_types(YNetConfig))
    return out


def apply_overrides(config: TrainConfig, values: dict[str, str]) -> TrainConfig:
    """Set flat ``key -> text`` values onto ``config`` (model keys included)."""
    kinds = config_fields()
    model_keys = set(_field_types(YNetConfig))
    for key, text in values.items():
        key = key.replace("-", "_")
        if key not in kinds:
            raise ValueError(f"unknown config key {key!r}")
        value = _coerce(kinds[key], text) if isinstance(text, str) else text
        target = config.model if key in model_keys else config
        setattr(target, key, value)
    return config


def read_config_file(path: str | os.PathLike, base: TrainConfig | None = None) -> TrainConfig:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        values[k.strip()] = v.strip()
    return apply_overrides(base or TrainConfig(), values)


def write_config_file(config: TrainConfig, path: str | os.PathLike) -> None:
    flat = config.to_dict()
    flat.update(flat.pop("model"))
    lines = []
    for k, v in flat.items():
        if isinstance(v, list):
            v = ",".join(str(c) for c in v)
        lines.append(f"{k} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class TrainLog:
    records: list[tuple[int, float, float]] = field(default_factory=list)
    val_records: list[tuple[int, float, float]] = field(default_factory=list)

    def add(self, iteration: int, loss: float, seconds: float) -> None:
        if self.records and iteration <= self.records[-1][0]:
            raise ValueError(f"iteration {iteration} does not follow {self.records[-1][0]}")
        self.records.append((iteration, loss, seconds))

    @property
    def losses(self) -> list[float]:
        return [r[1] for r in self.records]

    def write(self, out_dir: str | os.PathLike) -> None:
        out_dir = Path(out_dir)
        with open(out_dir / "train_log.tsv", "w") as fh:
            fh.write("iteration\tloss\tseconds\n")
            for it, loss, sec in self.records:
                fh.write(f"{it}\t{loss:.17g}\t{sec:.6f}\n")
        with open(out_dir / "val_log.tsv", "w") as fh:
            fh.write("iteration\tpsnr\tssim\n")
            for it, p, s in self.val_records:
                fh.write(f"{it}\t{p:.17g}\t{s:.17g}\n")


def batch_indices(seed: int, n: int, batch_size: int, iteration: int) -> list[int]:
    """Dataset indices of the batch consumed at 1-based ``iteration``."""
    start = (iteration - 1) * batch_size
    out = []
    epoch, offset = divmod(start, n)
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    while len(out) < batch_size:
        if offset == n:
            epoch, offset = epoch + 1, 0
            perm = np.random.default_rng([seed, epoch]).permutation(n)
        out.append(int(perm[offset]))
        offset += 1
    return out


def stack_pairs(pairs: Sequence[ImagePair], size: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Resize every pair to ``size x size`` RGB and stack to float32 tensors."""
    hazy, clear = [], []
    for p in pairs:
        h, c = to_rgb(p.hazy), to_rgb(p.clear)
        if h.shape[1:] != (size, size):
            h, c = resize(h, size, size), resize(c, size, size)
        hazy.append(h)
        clear.append(c)
    return (torch.from_numpy(np.stack(hazy)).float(), torch.from_numpy(np.stack(clear)).float())


def loss_step(model: YNet, optimizer: torch.optim.Optimizer, hazy: torch.Tensor,
              clear: torch.Tensor, config: TrainConfig, sched=None) -> float:
    """Forward, backward and one Adam update; returns the pre-update loss."""
    model.train()
    optimizer.zero_grad(set_to_none=True)
    out = model(hazy)
    loss = total_loss(out, clear, sched, DEFAULT_SSIM, config.loss_variant)
    value = float(loss.detach())
    if not np.isfinite(value):
        raise NonFiniteLossError(f"non-finite loss {value}")
    loss.backward()
    if config.grad_clip > 0:
        torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
    optimizer.step()
    return value


class Trainer:
    def __init__(self, config: TrainConfig, train_pairs: Sequence[ImagePair],
                 val_pairs: Sequence[ImagePair] = (), out_dir: str | os.PathLike | None = None,
                 model: YNet | None = None):
        self.config = config.validate()
        if not train_pairs:
            raise EmptyDatasetError("training set is empty")
        self.train_ids = [p.id for p in train_pairs]
        self.hazy, self.clear = stack_pairs(train_pairs, config.image_size)
        self.val_pairs = list(val_pairs)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        self.model = model if model is not None else build(config.model, seed=config.seed)
        self.optimizer = torch.optim.Adam(
            self.model.parameters(), lr=config.learning_rate, betas=(0.9, 0.999), eps=1e-8
        )
        self.sched = config.schedule()
        self.step = 0
        self.log = TrainLog()

    def _dump_nonfinite(self, ids: list[str], iteration: int) -> None:
        if self.out_dir is None:
            return
        dump = {"iteration": iteration, "batch_ids": ids}
        (self.out_dir / "nonfinite_batch.json").write_text(json.dumps(dump, indent=2))

    def run(self, until: int | None = None) -> TrainLog:
        until = self.config.iterations if until is None else until
        n = self.hazy.shape[0]
        while self.step < until:
            it = self.step + 1
            idx = batch_indices(self.config.seed, n, self.config.batch_size, it)
            t0 = time.perf_counter()
            try:
                loss = loss_step(self.model, self.optimizer, self.hazy[idx], self.clear[idx],
                                 self.config, self.sched)
            except NonFiniteLossError as exc:
                ids = [self.train_ids[i] for i in idx]
                self._dump_nonfinite(ids, it)
                raise NonFiniteLossError(f"iteration {it}: {exc}; batch ids {ids}") from None
            self.step = it
            self.log.add(it, loss, time.perf_counter() - t0)
            if self.config.eval_every and it % self.config.eval_every == 0 and self.val_pairs:
                self.validate()
            if self.config.checkpoint_every and it % self.config.checkpoint_every == 0:
                self.save()
        return self.log

    def validate(self) -> tuple[float, float]:
        from .evaluate import evaluate_model

        report = evaluate_model(self.model, self.val_pairs)
        self.log.val_records.append((self.step, report.mean_psnr, report.mean_ssim))
        logger.info("iter %d  val psnr %.3f  ssim %.4f", self.step, report.mean_psnr, report.mean_ssim)
        return report.mean_psnr, report.mean_ssim

    def save(self, path: str | os.PathLike | None = None) -> Path:
        if path is None:
            if self.out_dir is None:
                raise ValueError("no output directory for checkpoints")
            path = self.out_dir / f"ckpt_{self.step}.bin"
        save_checkpoint(path, self.model, {
            "train_config": self.config.to_json(),
            "optimizer": self.optimizer.state_dict(),
            "step": self.step,
            "log": {"records": self.log.records, "val_records": self.log.val_records},
        })
        if self.out_dir is not None:
            self.log.write(self.out_dir)
        return Path(path)


def train(config: TrainConfig, train_pairs: Sequence[ImagePair],
          val_pairs: Sequence[ImagePair] = (), out_dir: str | os.PathLike | None = None
          ) -> tuple[Path | None, TrainLog]:
    """Train from scratch; returns the final checkpoint path (if ``out_dir``) and log."""
    trainer = Trainer(config, train_pairs, val_pairs, out_dir)
    trainer.run()
    ckpt = trainer.save() if out_dir is not None else None
    return ckpt, trainer.log


def _check_compatible(saved: dict, new: dict, allow_change: bool) -> None:
    diffs = sorted(k for k in set(saved) | set(new)
                   if k not in _RESUME_FREE and saved.get(k) != new.get(k))
    if diffs and not allow_change:
        detail = ", ".join(f"{k}: {saved.get(k)!r} -> {new.get(k)!r}" for k in diffs)
        raise ConfigMismatchError(f"config differs from checkpoint ({detail}); "
                                  "pass allow_config_change to override")
    if "model" in diffs:
        raise ConfigMismatchError("model architecture cannot change on resume")


def resume(checkpoint: str | os.PathLike, config: TrainConfig, train_pairs: Sequence[ImagePair],
           val_pairs: Sequence[ImagePair] = (), out_dir: str | os.PathLike | None = None,
           allow_config_change: bool = False) -> tuple[Path | None, TrainLog]:
    """Continue a run from ``checkpoint`` up to ``config.iterations`` total steps."""
    model, payload = load_checkpoint(checkpoint)
    for key in ("optimizer", "train_config", "step"):
        if key not in payload:
            raise ValueError(f"{checkpoint} has no {key!r} entry; cannot resume training")
    saved = json.loads(payload["train_config"])
    config.validate()
    _check_compatible(saved, config.to_dict(), allow_config_change)
    trainer = Trainer(config, train_pairs, val_pairs, out_dir, model=model)
    trainer.optimizer.load_state_dict(payload["optimizer"])
    for group in trainer.optimizer.param_groups:
        group["lr"] = config.learning_rate
    trainer.step = int(payload["step"])
    trainer.log.records = [tuple(r) for r in payload["log"]["records"]]
    trainer.log.val_records = [tuple(r) for r in payload["log"]["val_records"]]
    trainer.run()
    ckpt = trainer.save() if out_dir is not None else None
    return ckpt, trainer.log
