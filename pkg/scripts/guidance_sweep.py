#!/usr/bin/env python3
"""Sweep the guidance scale on a trained checkpoint and print the
fidelity/latent-distance profile: PSNR falls as s rises while the latent
prediction moves linearly toward (and past) the conditional one.

Usage: python3 scripts/guidance_sweep.py --checkpoint runs/demo/stage2.spkv
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sparkprop.codec import decode, encode
from sparkprop.conditioning import (
    ORACLE_AUGMENT,
    KeyframeSet,
    ReferenceBundle,
    assemble_condition,
    augment_reference,
    build_sparse_reference,
)
from sparkprop.degrade import CLIP_KINDS, DegradationConfig, make_pair
from sparkprop.denoiser import TIMESTEP, predict, rfg_combine
from sparkprop.metrics import flicker_index, psnr, ssim
from sparkprop.train import load_training_checkpoint

SWEEP = (0.0, 0.5, 0.8, 1.0, 1.2, 1.5)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--checkpoint", required=True)
    ap.add_argument("--clips", type=int, default=4)
    ap.add_argument("--seed", type=int, default=9000)
    args = ap.parse_args()

    net, codec, _, meta = load_training_checkpoint(args.checkpoint)
    degr = DegradationConfig()
    rows = {s: {"psnr": [], "ssim": [], "flicker": [], "dist": []} for s in SWEEP}
    for i in range(args.clips):
        hr, lr_up = make_pair(CLIP_KINDS[i % 3], 33, 64, 64, degr, seed=args.seed + i)
        t, h, w, _ = hr.shape
        z_lr = encode(lr_up, codec)
        keys = KeyframeSet((0,), "manual")
        refs = ReferenceBundle(
            images={0: augment_reference(hr[0], ORACLE_AUGMENT, np.random.default_rng([i, 0]))}
        )
        z_ref = build_sparse_reference(refs, keys, codec, t, h, w)
        cond = predict(assemble_condition(z_lr, z_ref), TIMESTEP, net).data
        uncond = predict(assemble_condition(z_lr, np.zeros_like(z_ref)), TIMESTEP, net).data
        for s in SWEEP:
            v = rfg_combine(cond, uncond, s)
            out = decode(v, codec)
            rows[s]["psnr"].append(psnr(out, hr))
            rows[s]["ssim"].append(ssim(out, hr))
            rows[s]["flicker"].append(flicker_index(out, hr))
            rows[s]["dist"].append(float(np.linalg.norm(v - cond)))

    print(f"checkpoint: {args.checkpoint} (stage {meta.get('stage')}, iter {meta.get('iteration')})")
    print(f"{'s':>5} {'psnr':>8} {'ssim':>8} {'flicker':>9} {'|v-cond|':>10}")
    for s in SWEEP:
        print(
            f"{s:>5.1f} {np.mean(rows[s]['psnr']):>8.2f} {np.mean(rows[s]['ssim']):>8.4f} "
            f"{np.mean(rows[s]['flicker']):>9.4f} {np.mean(rows[s]['dist']):>10.2f}"
        )


if __name__ == "__main__":
    main()
