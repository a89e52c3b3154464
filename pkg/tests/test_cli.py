import os

import numpy as np
import pytest

from sparkprop.cli import main
from sparkprop.codec import CodecParams
from sparkprop.denoiser import DenoiserConfig, init_denoiser
from sparkprop.train import TrainConfig, save_training_checkpoint
from sparkprop.video_io import read_y4m, write_y4m

from helpers import checker_video, mp4_with_sync_samples


@pytest.fixture(scope="module")
def ckpt(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "cli.spkv"
    codec = CodecParams(mode="analytic")
    net = init_denoiser(
        DenoiserConfig(2 * codec.latent_channels, codec.latent_channels, width=16, blocks=2, norm_groups=4),
        seed=0,
    )
    save_training_checkpoint(str(path), net, codec, None, TrainConfig(stage=1, iterations=0), 0)
    return str(path)


def test_iframes_prints_both_bases(tmp_path, capsys):
    path = tmp_path / "a.mp4"
    path.write_bytes(mp4_with_sync_samples([1, 49, 97, 145]))
    main(["iframes", str(path)])
    out = capsys.readouterr().out
    assert "0,48,96,144" in out       # 0-based internal form
    assert "1,49,97,145" in out       # 1-based display labels


def test_iframes_json(tmp_path, capsys):
    path = tmp_path / "a.mp4"
    path.write_bytes(mp4_with_sync_samples([1, 5]))
    main(["iframes", str(path), "--json"])
    assert capsys.readouterr().out.strip() == "[0, 4]"


def test_synth_writes_y4m(tmp_path):
    out = tmp_path / "clip.y4m"
    main(["synth", "--kind", "textured_blobs", "--frames", "5", "--size", "16", "--out", str(out)])
    video, _ = read_y4m(out.read_bytes())
    assert video.shape == (5, 16, 16, 3)


def test_synth_pairs_manifest(tmp_path):
    out = tmp_path / "ds"
    main(["synth", "--pairs", "2", "--frames", "5", "--size", "16", "--scale", "2", "--out", str(out)])
    assert (out / "manifest.txt").exists()
    assert len(list(out.glob("*.y4m"))) == 4


def test_degrade_roundtrip(tmp_path):
    src = tmp_path / "hr.y4m"
    dst = tmp_path / "lr.y4m"
    src.write_bytes(write_y4m(checker_video(t=5, h=16, w=16)))
    main(["degrade", "--in", str(src), "--out", str(dst), "--scale", "2", "--seed", "3"])
    lr, _ = read_y4m(dst.read_bytes())
    assert lr.shape == (5, 8, 8, 3)


def test_eval_report(tmp_path, capsys):
    a = tmp_path / "a.y4m"
    b = tmp_path / "b.y4m"
    report = tmp_path / "report.csv"
    video = checker_video(t=3, h=16, w=16)
    a.write_bytes(write_y4m(video))
    b.write_bytes(write_y4m(video))
    main(["eval", "--pred", str(a), "--gt", str(b), "--xt-row", "4", "--out", str(report)])
    text = report.read_text()
    assert "clip,psnr_db,ssim,flicker" in text
    assert "aggregate," in text
    assert (tmp_path / "report_pred_xt4.pgm").exists()
    assert (tmp_path / "report_gt_xt4.pgm").exists()


def test_restore_blind(tmp_path, ckpt):
    src = tmp_path / "in.y4m"
    dst = tmp_path / "out.y4m"
    src.write_bytes(write_y4m(checker_video(t=5, h=16, w=16)))
    main(["restore", "--in", str(src), "--out", str(dst), "--checkpoint", ckpt, "--s", "0"])
    out, _ = read_y4m(dst.read_bytes())
    assert out.shape == (5, 16, 16, 3)


def test_restore_env_checkpoint(tmp_path, ckpt, monkeypatch):
    monkeypatch.setenv("SPARKPROP_CHECKPOINT", ckpt)
    src = tmp_path / "in.y4m"
    dst = tmp_path / "out.y4m"
    src.write_bytes(write_y4m(checker_video(t=5, h=16, w=16)))
    main(["restore", "--in", str(src), "--out", str(dst), "--xt-row", "3"])
    assert dst.exists()
    assert (tmp_path / "out_xt3.pgm").exists()


def test_restore_missing_checkpoint_exits(tmp_path, monkeypatch):
    monkeypatch.delenv("SPARKPROP_CHECKPOINT", raising=False)
    src = tmp_path / "in.y4m"
    src.write_bytes(write_y4m(checker_video(t=5, h=16, w=16)))
    with pytest.raises(SystemExit):
        main(["restore", "--in", str(src), "--out", str(tmp_path / "o.y4m")])


def test_train_cli_roundtrip(tmp_path):
    ds = tmp_path / "ds"
    main(["synth", "--pairs", "2", "--frames", "5", "--size", "16", "--scale", "2", "--out", str(ds)])
    out = tmp_path / "model.spkv"
    log = tmp_path / "log.csv"
    main([
        "train", "--data", str(ds), "--stage", "1", "--iterations", "3",
        "--width", "16", "--blocks", "2", "--out", str(out), "--log", str(log),
    ])
    assert out.exists()
    assert log.read_text().startswith("iteration,stage,loss")
