"""Regenerate the committed SSIM oracle fixture from scikit-image.

Usage: python scripts/make_ssim_fixtures.py

Pairs are rebuilt from seeds by ``ynet_dehaze.selftest.fixture_pair``; the
expected values come from ``skimage.metrics.structural_similarity`` with
Gaussian weighting (sigma 1.5), population covariance and data range 1.
"""
import json
from pathlib import Path

from skimage.metrics import structural_similarity

from ynet_dehaze.selftest import FIXTURE_PATH, fixture_pair

N_PAIRS = 20


def main():
    entries = []
    for seed in range(N_PAIRS):
        x, y, noise = fixture_pair(seed)
        value = structural_similarity(
            x, y, channel_axis=0, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, data_range=1.0,
        )
        entries.append({"seed": seed, "noise": noise, "ssim": float(value)})
    payload = {
        "reference": "skimage.metrics.structural_similarity",
        "shape": [3, 64, 64],
        "pairs": entries,
    }
    Path(FIXTURE_PATH).write_text(json.dumps(payload, indent=1) + "\n")
    print(f"wrote {len(entries)} pairs to {FIXTURE_PATH}")


if __name__ == "__main__":
    main()
