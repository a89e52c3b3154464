"""Generate the fixture assets the scripted UI session test needs:
a tiny checkpoint, a Y4M clip, an MP4 sidecar with sync samples, and a
reference PPM.  Usage: python3 make_assets.py OUTDIR"""

import os
import struct
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "..", "src"))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "..", "tests"))

import numpy as np

from helpers import checker_video, mp4_with_sync_samples
from sparkprop.codec import CodecParams
from sparkprop.denoiser import DenoiserConfig, init_denoiser
from sparkprop.train import TrainConfig, save_training_checkpoint
from sparkprop.video_io import write_ppm, write_y4m


def main(out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    codec = CodecParams(mode="analytic")
    net = init_denoiser(
        DenoiserConfig(2 * codec.latent_channels, codec.latent_channels, width=16, blocks=2, norm_groups=4),
        seed=0,
    )
    save_training_checkpoint(
        os.path.join(out_dir, "ckpt.spkv"), net, codec, None, TrainConfig(stage=1, iterations=0), 0
    )
    video = checker_video(t=33, h=16, w=16, seed=3)
    with open(os.path.join(out_dir, "clip.y4m"), "wb") as f:
        f.write(write_y4m(video))
    with open(os.path.join(out_dir, "clip.mp4"), "wb") as f:
        f.write(mp4_with_sync_samples([1, 9, 17, 25, 33]))
    with open(os.path.join(out_dir, "ref.ppm"), "wb") as f:
        f.write(write_ppm(video[0]))
    print("assets written to", out_dir)


if __name__ == "__main__":
    main(sys.argv[1])
