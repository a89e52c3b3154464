"""Command-line interface: iframes, synth, degrade, train, restore, eval, serve.

Frame indices in human-readable output are printed 1-based next to the
0-based form used by files and the API.  SPARKPROP_CHECKPOINT selects the
default checkpoint.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

CHECKPOINT_ENV = "SPARKPROP_CHECKPOINT"


def _default_checkpoint(args) -> str:
    path = args.checkpoint or os.environ.get(CHECKPOINT_ENV)
    if not path:
        sys.exit(f"no checkpoint: pass --checkpoint or set {CHECKPOINT_ENV}")
    if not os.path.exists(path):
        sys.exit(f"checkpoint not found: {path}")
    return path


def cmd_iframes(args):
    from .video_io import parse_mp4_sync_samples

    with open(args.file, "rb") as f:
        table = parse_mp4_sync_samples(f.read())
    if args.json:
        print(json.dumps(table))
    else:
        print(f"sync samples (0-based): {','.join(str(i) for i in table)}")
        print(f"display labels (1-based): {','.join(str(i + 1) for i in table)}")


def cmd_synth(args):
    from .degrade import DegradationConfig, make_pair, synth_clip, write_dataset
    from .video_io import write_y4m

    if args.pairs:
        cfg = DegradationConfig(
            blur_sigma=(args.blur_lo, args.blur_hi),
            downscale=args.scale,
            noise_sigma=(args.noise_lo, args.noise_hi),
        )
        kinds = ["moving_checker", "drifting_text", "textured_blobs"]
        pairs, seeds = [], []
        for i in range(args.pairs):
            seed = args.seed + i
            pairs.append(make_pair(kinds[i % 3], args.frames, args.size, args.size, cfg, seed))
            seeds.append(seed)
        write_dataset(args.out, pairs, seeds)
        print(f"wrote {args.pairs} pairs and manifest.txt to {args.out}")
    else:
        clip = synth_clip(args.kind, args.frames, args.size, args.size, np.random.default_rng(args.seed))
        with open(args.out, "wb") as f:
            f.write(write_y4m(clip))
        print(f"wrote {args.kind} clip ({args.frames}x{args.size}x{args.size}) to {args.out}")


def cmd_degrade(args):
    from .degrade import DegradationConfig, degrade_video, upsample_to
    from .video_io import read_y4m, write_y4m

    with open(args.infile, "rb") as f:
        video, fps = read_y4m(f.read())
    cfg = DegradationConfig(
        blur_sigma=(args.blur_lo, args.blur_hi),
        downscale=args.scale,
        noise_sigma=(args.noise_lo, args.noise_hi),
        blockiness=args.blockiness,
    )
    lr = degrade_video(video, cfg, np.random.default_rng(args.seed))
    if args.upsample_back:
        lr = upsample_to(lr, video.shape[1], video.shape[2])
    with open(args.out, "wb") as f:
        f.write(write_y4m(lr, fps))
    print(f"degraded {args.infile} -> {args.out} ({lr.shape[0]}x{lr.shape[1]}x{lr.shape[2]})")


def cmd_train(args):
    from .codec import CodecParams, CodecTrainConfig, init_learned_codec, pretrain_codec
    from .degrade import load_dataset
    from .train import TrainConfig, config_from_kv, train_run

    cfg = TrainConfig(stage=args.stage)
    if args.config:
        with open(args.config) as f:
            cfg = config_from_kv(f.read(), base=cfg)
    if args.iterations is not None:
        from dataclasses import replace

        cfg = replace(cfg, iterations=args.iterations)
    if args.lr is not None:
        from dataclasses import replace

        cfg = replace(cfg, lr=args.lr)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)

    pairs = load_dataset(args.data)
    if args.codec == "analytic":
        codec = CodecParams(mode="analytic")
    elif args.codec == "learned":
        hr_clips = [hr for hr, _ in pairs]
        codec, _ = pretrain_codec(
            hr_clips, CodecTrainConfig(iterations=args.codec_iters, seed=cfg.seed)
        )
        print(f"pretrained learned codec for {args.codec_iters} iterations")
    else:
        sys.exit(f"unknown codec mode {args.codec}")

    out = train_run(
        cfg,
        pairs,
        args.out,
        codec=codec if not args.resume else None,
        resume=args.resume,
        log_path=args.log,
        width=args.width,
        blocks=args.blocks,
    )
    print(f"checkpoint written to {out}")


def cmd_restore(args):
    from .conditioning import KeyframeSet, keyframes_from_str
    from .pipeline import ContentStore, JobEngine, RestoreEngine, RestoreSpec
    from .video_io import read_ppm, write_ppm

    engine = RestoreEngine(_default_checkpoint(args))
    store = ContentStore()
    jobs = JobEngine(engine, store, workers=1)

    with open(args.infile, "rb") as f:
        video_rec = jobs.add_video(f.read(), name=os.path.basename(args.infile))

    if args.keyframes:
        if args.keyframes.startswith("k="):
            keys = keyframes_from_str(args.keyframes)
        else:
            keys = KeyframeSet(tuple(int(x) for x in args.keyframes.split(",")), "manual")
    else:
        keys = KeyframeSet((), "manual")

    refs = {}
    ref_source = "none"
    gt_id = None
    if args.gt:
        with open(args.gt, "rb") as f:
            gt_id = jobs.add_video(f.read(), name="gt").video_id
        ref_source = "oracle_augmented_gt"
    elif args.refs:
        ref_source = "uploaded"
        for item in args.refs:
            frame_str, path = item.split("=", 1)
            with open(path, "rb") as f:
                rec = jobs.add_reference(f.read(), int(frame_str))
            refs[int(frame_str)] = rec.ref_id

    spec = RestoreSpec(
        video_id=video_rec.video_id,
        keyframes=keys,
        ref_source=ref_source,
        refs=refs,
        guidance_s=args.s,
        gt_video_id=gt_id,
        out_scale=args.out_scale,
    )
    job_id = jobs.submit(spec)
    snap = jobs.wait(job_id, timeout=args.timeout)
    if snap["status"] != "done":
        sys.exit(f"restore failed: {snap['error']}")
    with open(args.out, "wb") as f:
        f.write(jobs.fetch_result(job_id))
    print(f"restored video written to {args.out}")
    if args.xt_row is not None:
        xt = jobs.fetch_xt(job_id, args.xt_row)
        xt_path = args.xt_out or (os.path.splitext(args.out)[0] + f"_xt{args.xt_row}.pgm")
        with open(xt_path, "wb") as f:
            f.write(xt)
        print(f"x-t slice (row {args.xt_row}) written to {xt_path}")


def cmd_eval(args):
    from .metrics import eval_report, xt_slice_pgm
    from .video_io import read_y4m

    with open(args.pred, "rb") as f:
        pred, _ = read_y4m(f.read())
    with open(args.gt, "rb") as f:
        gt, _ = read_y4m(f.read())
    report = eval_report([(os.path.basename(args.pred), pred, gt)])
    csv = report.to_csv()
    if args.out:
        with open(args.out, "w") as f:
            f.write(csv)
        print(f"report written to {args.out}")
    print(csv, end="")
    if args.xt_row is not None:
        for label, video in (("pred", pred), ("gt", gt)):
            path = f"{os.path.splitext(args.out or args.pred)[0]}_{label}_xt{args.xt_row}.pgm"
            with open(path, "wb") as f:
                f.write(xt_slice_pgm(video, args.xt_row))
            print(f"{label} x-t slice written to {path}")


def cmd_serve(args):
    import uvicorn

    from .pipeline import ContentStore, JobEngine, RestoreEngine
    from .service import create_app

    engine = RestoreEngine(_default_checkpoint(args))
    store = ContentStore(args.store)
    jobs = JobEngine(engine, store, workers=args.workers)
    app = create_app(jobs)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparkprop", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("iframes", help="list sync samples (I-frames) of an MP4")
    sp.add_argument("file")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_iframes)

    sp = sub.add_parser("synth", help="synthesize HR clips or paired datasets")
    sp.add_argument("--kind", default="moving_checker")
    sp.add_argument("--frames", type=int, default=33)
    sp.add_argument("--size", type=int, default=64)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--pairs", type=int, default=0, help="write N HR/LR pairs + manifest instead")
    sp.add_argument("--scale", type=int, default=4)
    sp.add_argument("--blur-lo", type=float, default=0.8)
    sp.add_argument("--blur-hi", type=float, default=1.6)
    sp.add_argument("--noise-lo", type=float, default=0.005)
    sp.add_argument("--noise-hi", type=float, default=0.02)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("degrade", help="apply the LR degradation to a Y4M clip")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--scale", type=int, default=4)
    sp.add_argument("--blur-lo", type=float, default=0.8)
    sp.add_argument("--blur-hi", type=float, default=1.6)
    sp.add_argument("--noise-lo", type=float, default=0.005)
    sp.add_argument("--noise-hi", type=float, default=0.02)
    sp.add_argument("--blockiness", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--upsample-back", action="store_true", help="bilinear upsample LR to source size")
    sp.set_defaults(func=cmd_degrade)

    sp = sub.add_parser("train", help="run a training stage over a dataset directory")
    sp.add_argument("--data", required=True, help="dataset directory with manifest.txt")
    sp.add_argument("--stage", type=int, default=1)
    sp.add_argument("--config", help="key=value config file")
    sp.add_argument("--iterations", type=int)
    sp.add_argument("--lr", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--resume", help="checkpoint to resume from (required for stage 2)")
    sp.add_argument("--codec", default="analytic", choices=["analytic", "learned"])
    sp.add_argument("--codec-iters", type=int, default=2000)
    sp.add_argument("--width", type=int, default=64)
    sp.add_argument("--blocks", type=int, default=4)
    sp.add_argument("--log", help="CSV metrics log path")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("restore", help="restore a Y4M clip with optional references")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--checkpoint")
    sp.add_argument("--keyframes", help="0-based indices 'a,b,c' or 'k=a,b,c;origin=...'")
    sp.add_argument("--refs", nargs="*", help="FRAME=image.ppm (0-based frame index)")
    sp.add_argument("--gt", help="ground-truth Y4M for oracle references")
    sp.add_argument("--s", type=float, default=1.0, help="guidance scale")
    sp.add_argument("--out-scale", type=int, default=1)
    sp.add_argument("--xt-row", type=int)
    sp.add_argument("--xt-out")
    sp.add_argument("--timeout", type=float, default=600.0)
    sp.set_defaults(func=cmd_restore)

    sp = sub.add_parser("eval", help="full-reference metrics report")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gt", required=True)
    sp.add_argument("--xt-row", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8571)
    sp.add_argument("--checkpoint")
    sp.add_argument("--store", help="directory for persistent artifacts")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_serve)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
