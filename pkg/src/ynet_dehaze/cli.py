"""Command-line entry point: ``ynet <subcommand> [--key value ...]``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .trainer import TrainConfig, apply_overrides, config_fields, deterministic_mode, read_config_file

logger = logging.getLogger("ynet")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file; flags override it")
    for key, kind in config_fields().items():
        flag = "--" + key.replace("_", "-")
        if kind is bool:
            p.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None)
        else:
            p.add_argument(flag, dest=key, default=None, metavar=kind.__name__.upper(),
                           help=f"TrainConfig/YNetConfig field {key}")


def _config_from_args(args) -> TrainConfig:
    cfg = read_config_file(args.config) if args.config else TrainConfig()
    given = {k: getattr(args, k) for k in config_fields() if getattr(args, k, None) is not None}
    return apply_overrides(cfg, given).validate()


def _pairs(data_dir: Path):
    from .image_core import scan_pairs

    result = scan_pairs(data_dir / "hazy", data_dir / "clear")
    for w in result.warnings:
        logger.warning(w)
    return result.pairs


def cmd_synth(args) -> None:
    from .haze_synth import synthesize_dataset

    n = synthesize_dataset(args.clear_dir, args.out_dir, tuple(args.beta), tuple(args.A),
                           seed=args.seed, d_max=args.d_max,
                           per_channel_light=args.per_channel_light, size=args.size)
    print(f"wrote {n} pairs to {args.out_dir}")


def cmd_train(args) -> None:
    from .trainer import resume, train

    cfg = _config_from_args(args)
    train_pairs = _pairs(args.data)
    val_pairs = _pairs(args.val_data) if args.val_data else []
    if args.resume:
        ckpt, log = resume(args.resume, cfg, train_pairs, val_pairs, args.out_dir,
                           allow_config_change=args.allow_config_change)
    else:
        ckpt, log = train(cfg, train_pairs, val_pairs, args.out_dir)
    print(f"final loss {log.losses[-1]:.6f} after {len(log.records)} iterations; checkpoint {ckpt}")


def cmd_eval(args) -> None:
    from .evaluate import evaluate, load_dehazer, write_gallery

    checkpoint = "identity" if args.identity else args.checkpoint
    if checkpoint is None:
        raise UsageError("eval: give --checkpoint or --identity")
    pairs = _pairs(args.data)
    report = evaluate(checkpoint, pairs, dataset=str(args.data))
    if args.out:
        report.write_tsv(args.out)
    if args.gallery:
        write_gallery(load_dehazer(checkpoint)[0], pairs, args.gallery)
    print(f"{len(report.rows)} images  mean PSNR {report.mean_psnr:.3f} dB  mean SSIM {report.mean_ssim:.4f}")


def cmd_dehaze(args) -> None:
    from .evaluate import dehaze

    dehaze(args.checkpoint, args.input, args.output)
    print(f"wrote {args.output}")


def cmd_ablate(args) -> None:
    from .ablation import ablate

    cfg = _config_from_args(args)
    train_pairs = _pairs(args.data)
    val_pairs = _pairs(args.val_data)
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
    result = ablate(cfg, train_pairs, val_pairs, args.out_dir, seeds=seeds)
    print("variant\tpsnr\tssim")
    for v, p, s in result.summary():
        print(f"{v}\t{p:.2f}\t{s:.3f}")


def cmd_selftest(args) -> None:
    from .selftest import run_all

    if not run_all(seed=args.seed):
        raise RuntimeError("selftest failed")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ynet", description="Y-net dehazing toolkit")
    parser.add_argument("--deterministic", action="store_true",
                        help="single-threaded deterministic kernels (also YNET_DETERMINISTIC=1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="synthesize hazy/clear pairs from clear PNGs")
    p.add_argument("--clear-dir", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--beta", type=float, nargs=2, default=(0.4, 1.6), metavar=("LO", "HI"))
    p.add_argument("--A", type=float, nargs=2, default=(0.7, 1.0), metavar=("LO", "HI"))
    p.add_argument("--d-max", type=float, default=3.0)
    p.add_argument("--size", type=int, default=None, help="resize clear images to SIZE x SIZE first")
    p.add_argument("--per-channel-light", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a Y-net")
    p.add_argument("--data", type=Path, required=True, help="directory with hazy/ and clear/")
    p.add_argument("--val-data", type=Path)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--resume", type=Path, help="checkpoint to continue from")
    p.add_argument("--allow-config-change", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="PSNR/SSIM report for a checkpoint")
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--identity", action="store_true", help="score the hazy inputs themselves")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, help="TSV report path")
    p.add_argument("--gallery", type=Path, help="directory for hazy|dehazed|clear strips")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dehaze", help="dehaze one image")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.set_defaults(func=cmd_dehaze)

    p = sub.add_parser("ablate", help="train and evaluate all four loss variants")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--val-data", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--seeds", help="comma-separated seeds (default: --seed)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("selftest", help="run the built-in invariant suites")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    deterministic_mode(True if args.deterministic else None)
    try:
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
