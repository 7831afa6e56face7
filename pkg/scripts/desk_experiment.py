"""Desk-scale dehazing experiment: synthetic haze on scikit-image sample crops,
WSSIM+L2 and L2-only runs over several seeds, held-out PSNR/SSIM.

    python scripts/desk_experiment.py --out runs/desk --seeds 0,1,2
"""
import argparse
import logging

from ynet_dehaze.desk import build_desk_dataset, median_metric, run_desk
from ynet_dehaze.trainer import deterministic_mode


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--variants", default="WSSIM_PLUS_L2,L2")
    ap.add_argument("--iterations", type=int, default=400)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    deterministic_mode(True)

    data = build_desk_dataset(f"{args.out}/data")
    seeds = [int(s) for s in args.seeds.split(",")]
    variants = args.variants.split(",")
    baseline, runs = run_desk(data, f"{args.out}/runs", variants=variants, seeds=seeds,
                              iterations=args.iterations)
    print(f"hazy input      PSNR {baseline.mean_psnr:6.2f}  SSIM {baseline.mean_ssim:.4f}")
    for v in variants:
        print(f"{v:15s} PSNR {median_metric(runs, v, 'psnr'):6.2f}  SSIM {median_metric(runs, v, 'ssim'):.4f}"
              f"  (median of {len(seeds)} seeds)")


if __name__ == "__main__":
    main()
