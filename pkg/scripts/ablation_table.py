"""Four-variant loss ablation (L2, SSIM, WSSIM, WSSIM+L2) on the desk dataset,
printed as a PSNR/SSIM table with one row per variant.

    python scripts/ablation_table.py --out runs/ablation --seeds 0
"""
import argparse
import logging

from ynet_dehaze.ablation import ablate
from ynet_dehaze.desk import build_desk_dataset, desk_config
from ynet_dehaze.trainer import deterministic_mode


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/ablation")
    ap.add_argument("--seeds", default="0")
    ap.add_argument("--iterations", type=int, default=400)
    ap.add_argument("--literal-alg1-weights", action="store_true",
                    help="use the unnormalized printed weight recurrence")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    deterministic_mode(True)

    data = build_desk_dataset(f"{args.out}/data")
    cfg = desk_config(iterations=args.iterations, literal_alg1_weights=args.literal_alg1_weights)
    result = ablate(cfg, data.train, data.val, args.out,
                    seeds=[int(s) for s in args.seeds.split(",")],
                    progress=lambda v, s, r: print(f"  {v} seed {s}: {r.mean_psnr:.2f} dB {r.mean_ssim:.4f}"))
    print("\n             PSNR    SSIM")
    for v, p, s in result.summary():
        print(f"{v:13s} {p:6.2f}  {s:.4f}")


if __name__ == "__main__":
    main()
