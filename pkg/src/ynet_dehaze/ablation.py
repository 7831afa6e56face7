"""Train every loss variant on one shared split and tabulate PSNR/SSIM."""
from __future__ import annotations

import dataclasses
import os
import statistics
from pathlib import Path
from typing import Sequence

from .evaluate import EvalReport, evaluate
from .image_core import ImagePair
from .trainer import TrainConfig, train
from .wssim import ABLATION_ORDER


@dataclasses.dataclass
class AblationResult:
    reports: dict[str, list[EvalReport]]
    seeds: list[int]

    def summary(self) -> list[tuple[str, float, float]]:
        """Rows ``(variant, psnr, ssim)`` in fixed order, medians over seeds."""
        rows = []
        for v in ABLATION_ORDER:
            reps = self.reports.get(v.value)
            if not reps:
                continue
            rows.append((v.value,
                         statistics.median(r.mean_psnr for r in reps),
                         statistics.median(r.mean_ssim for r in reps)))
        return rows

    def write_summary(self, path: str | os.PathLike) -> None:
        lines = ["variant\tpsnr\tssim"]
        lines += [f"{v}\t{p:.4f}\t{s:.4f}" for v, p, s in self.summary()]
        Path(path).write_text("\n".join(lines) + "\n")


def ablate(base_config: TrainConfig, train_pairs: Sequence[ImagePair],
           val_pairs: Sequence[ImagePair], out_dir: str | os.PathLike,
           seeds: Sequence[int] | None = None, variants=ABLATION_ORDER,
           progress=None) -> AblationResult:
    """Train the four loss variants per seed on the same data; evaluate each.

    ``variants`` may be restricted for partial runs; the summary then only
    covers variants that were trained.
    """
    out_dir = Path(out_dir)
    seeds = list(seeds) if seeds is not None else [base_config.seed]
    reports: dict[str, list[EvalReport]] = {v.value: [] for v in variants}
    for seed in seeds:
        for v in variants:
            cfg = dataclasses.replace(base_config, loss_variant=v.value, seed=seed,
                                      model=dataclasses.replace(base_config.model))
            run_dir = out_dir / f"{v.value}_seed{seed}"
            ckpt, _ = train(cfg, train_pairs, val_pairs, run_dir)
            report = evaluate(ckpt, val_pairs)
            report.metadata.update(variant=v.value, seed=str(seed))
            report.write_tsv(run_dir / "eval.tsv")
            reports[v.value].append(report)
            if progress is not None:
                progress(v.value, seed, report)
    result = AblationResult(reports, seeds)
    if set(reports) == {v.value for v in ABLATION_ORDER}:
        result.write_summary(out_dir / "summary.tsv")
    return result
