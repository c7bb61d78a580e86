import json
import math
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_hard, random_simplex
from epd import HardLabelMap, ImagePlane, one_hot
from epd.cli import main, pad_to_multiple
from epd.planefile import load, save


def run(*argv):
    return main([str(a) for a in argv])


def test_downsample_epd_label_from_synth(tmp_path):
    label_path = tmp_path / "label.plane"
    out_path = tmp_path / "soft.plane"
    assert run("synth", "--shape", "disk", "--size", "64", "--radius", "20", "--output", label_path) == 0
    assert run(
        "downsample", "--input", label_path, "--factor", "8",
        "--method", "epd", "--kind", "label", "--output", out_path,
    ) == 0
    soft = load(str(out_path))
    assert (soft.height, soft.width, soft.num_classes) == (8, 8, 2)


def test_downsample_nearest_produces_hard_label(tmp_path):
    label_path = tmp_path / "label.plane"
    out_path = tmp_path / "hard.plane"
    save(str(label_path), random_hard(np.random.default_rng(0), 16, 16, 3))
    assert run(
        "downsample", "--input", label_path, "--factor", "4",
        "--method", "nearest", "--kind", "label", "--output", out_path,
    ) == 0
    meta = json.loads((tmp_path / "hard.plane.json").read_text())
    assert meta["semantic"] == "hard-label"
    assert meta["num_classes"] == 3


def test_downsample_from_pgm_input(tmp_path):
    pgm = tmp_path / "label.pgm"
    pgm.write_bytes(b"P5\n8 8\n1\n" + bytes(64))
    out_path = tmp_path / "soft.plane"
    assert run(
        "downsample", "--input", pgm, "--factor", "2",
        "--method", "epd", "--kind", "label", "--output", out_path,
    ) == 0
    assert load(str(out_path)).height == 4


def test_downsample_divisibility_error_suggests_pad(tmp_path, capsys):
    label_path = tmp_path / "label.plane"
    save(str(label_path), random_hard(np.random.default_rng(0), 512, 512, 2))
    code = run(
        "downsample", "--input", label_path, "--factor", "3",
        "--method", "epd", "--kind", "label", "--output", tmp_path / "out.plane",
    )
    assert code == 2
    assert "513" in capsys.readouterr().err


def test_downsample_pad_flag_makes_it_divisible(tmp_path, capsys):
    label_path = tmp_path / "label.plane"
    save(str(label_path), random_hard(np.random.default_rng(0), 10, 10, 2))
    out_path = tmp_path / "out.plane"
    assert run(
        "downsample", "--input", label_path, "--factor", "4",
        "--method", "epd", "--kind", "label", "--output", out_path, "--pad",
    ) == 0
    assert load(str(out_path)).height == 3
    assert "padded input by (2, 2)" in capsys.readouterr().err


def test_invalid_method_kind_combinations(tmp_path, capsys):
    label_path = tmp_path / "label.plane"
    save(str(label_path), random_hard(np.random.default_rng(0), 8, 8, 2))
    img_path = tmp_path / "img.plane"
    save(str(img_path), ImagePlane(np.zeros((8, 8))), semantic="image-hu")
    assert run(
        "downsample", "--input", label_path, "--factor", "2",
        "--method", "bilinear", "--kind", "label", "--output", tmp_path / "x.plane",
    ) == 2
    assert run(
        "downsample", "--input", img_path, "--factor", "2",
        "--method", "nearest", "--kind", "image", "--output", tmp_path / "y.plane",
    ) == 2


def test_image_downsample_keeps_semantic(tmp_path):
    img_path = tmp_path / "img.plane"
    save(str(img_path), ImagePlane(np.random.default_rng(1).uniform(-500, 500, (16, 16))), semantic="image-hu")
    out_path = tmp_path / "small.plane"
    assert run(
        "downsample", "--input", img_path, "--factor", "2",
        "--method", "bilinear", "--kind", "image", "--output", out_path,
    ) == 0
    assert json.loads((tmp_path / "small.plane.json").read_text())["semantic"] == "image-hu"


def test_metrics_perfect_prediction_csv(tmp_path, capsys):
    rng = np.random.default_rng(7)
    target = random_hard(rng, 8, 8, 3)
    target_path = tmp_path / "target.plane"
    pred_path = tmp_path / "pred.plane"
    save(str(target_path), target)
    save(str(pred_path), one_hot(target))
    assert run("metrics", "--pred", pred_path, "--target", target_path) == 0
    out = capsys.readouterr().out
    assert "threshold=0.000000" in out
    average = [l for l in out.strip().split("\n") if l.startswith("average")][0]
    assert average.split(",")[5] == "1.000000"  # DSC_h column


def test_metrics_excluded_class_listed(tmp_path, capsys):
    data = np.array([[0, 1], [1, 0]], dtype=np.int32)
    target = HardLabelMap(data, 3)  # class 2 missing
    target_path = tmp_path / "target.plane"
    pred_path = tmp_path / "pred.plane"
    save(str(target_path), target)
    save(str(pred_path), one_hot(target))
    assert run("metrics", "--pred", pred_path, "--target", target_path, "--report", "json") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["excluded_classes"] == [2]


def test_metrics_accepts_soft_target(tmp_path, capsys):
    rng = np.random.default_rng(3)
    soft_target = random_simplex(rng, 6, 6, 2)
    pred = random_simplex(rng, 6, 6, 2)
    target_path = tmp_path / "target.plane"
    pred_path = tmp_path / "pred.plane"
    save(str(target_path), soft_target)
    save(str(pred_path), pred)
    assert run("metrics", "--pred", pred_path, "--target", target_path, "--report", "json") == 0
    payload = json.loads(capsys.readouterr().out)
    assert 0.0 <= payload["average"]["DSC_s"] <= 1.0


def test_metrics_epd_target_scores_higher_dsc_s_than_nearest_target(tmp_path, capsys):
    # full pipeline: a disk downsampled by the probabilistic route keeps edge
    # mass that the nearest route discards, so a matching soft "prediction"
    # scores higher against the probabilistic target.
    disk_path = tmp_path / "disk.plane"
    assert run("synth", "--shape", "disk", "--size", "128", "--radius", "40", "--output", disk_path) == 0
    epd_t = tmp_path / "epd_target.plane"
    near_t = tmp_path / "near_target.plane"
    assert run("downsample", "--input", disk_path, "--factor", "8", "--method", "epd",
               "--kind", "label", "--output", epd_t) == 0
    assert run("downsample", "--input", disk_path, "--factor", "8", "--method", "nearest",
               "--kind", "label", "--output", near_t) == 0
    pred_path = tmp_path / "pred.plane"
    save(str(pred_path), load(str(epd_t)))  # prediction equals the soft target

    def dsc_s_against(target_path):
        assert run("metrics", "--pred", pred_path, "--target", target_path, "--report", "json") == 0
        return json.loads(capsys.readouterr().out)["average"]["DSC_s"]

    assert dsc_s_against(epd_t) > dsc_s_against(near_t)


def test_loss_eval_identical_files(tmp_path, capsys):
    soft = random_simplex(np.random.default_rng(11), 6, 6, 2)
    a, b = tmp_path / "a.plane", tmp_path / "b.plane"
    save(str(a), soft)
    save(str(b), soft)
    assert run("loss-eval", "--target", a, "--pred", b) == 0
    out = capsys.readouterr().out
    assert "l1    value=0.000000" in out
    assert "dice  value=0.000000" in out
    assert f"total value={2 * math.log(2):.6f}" in out


def test_pipeline_three_channel_output(tmp_path):
    hu = ImagePlane(np.random.default_rng(5).uniform(-1000, 1000, (64, 64)))
    in_path = tmp_path / "slice.plane"
    save(str(in_path), hu, semantic="image-hu")
    out_path = tmp_path / "input_stack.plane"
    assert run(
        "pipeline", "--input", in_path, "--factor", "4",
        "--windows", "-190:-30,-29:150,-1000:1000", "--output", out_path,
    ) == 0
    meta = json.loads((tmp_path / "input_stack.plane.json").read_text())
    assert meta["semantic"] == "image-norm"
    assert meta["channels"] == 3
    assert meta["height"] == 16 and meta["width"] == 16
    stack = load(str(out_path))
    assert all(0.0 <= ch.data.min() and ch.data.max() <= 1.0 for ch in stack.channels)


def test_pipeline_config_file_with_flag_override(tmp_path):
    hu = ImagePlane(np.zeros((8, 8)))
    in_path = tmp_path / "slice.plane"
    save(str(in_path), hu, semantic="image-hu")
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"windows": [[-190, -30], [-29, 150], [-1000, 1000]], "factor": 2}))
    out_path = tmp_path / "out.plane"
    assert run("pipeline", "--input", in_path, "--config", config, "--factor", "4",
               "--output", out_path) == 0
    assert load(str(out_path)).height == 2  # flag overrode the config factor


def test_bench_stripes_reports_nearest_mass_error_one(tmp_path):
    out_path = tmp_path / "bench.csv"
    assert run(
        "bench", "--shape", "stripes", "--width", "1", "--size", "64",
        "--factors", "2,4", "--output", out_path,
    ) == 0
    lines = out_path.read_text().strip().split("\n")
    assert lines[0] == "method,shape,factor,phase,mass_error,edge_fraction"
    rows = [l.split(",") for l in lines[1:]]
    nearest = [r for r in rows if r[0] == "nearest"]
    epd_rows = [r for r in rows if r[0] == "epd"]
    assert all(float(r[4]) == 0.0 for r in epd_rows)
    assert any(float(r[4]) == 1.0 for r in nearest)
    assert all(float(r[5]) == 0.0 for r in nearest)


def test_bench_rejects_bad_thread_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("EPD_THREADS", "-2")
    assert run("bench", "--shape", "stripes", "--size", "16", "--output", tmp_path / "x.csv") == 2
    assert "EPD_THREADS" in capsys.readouterr().err


def test_bench_respects_thread_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("EPD_THREADS", "2")
    out_path = tmp_path / "bench.csv"
    assert run("bench", "--shape", "stripes", "--size", "32", "--factors", "2",
               "--output", out_path) == 0
    assert len(out_path.read_text().strip().split("\n")) == 1 + 2 * 2  # header + 2 phases x 2 methods


def test_reruns_are_bit_identical(tmp_path):
    label_path = tmp_path / "label.plane"
    save(str(label_path), random_hard(np.random.default_rng(13), 32, 32, 4))
    out1, out2 = tmp_path / "one.plane", tmp_path / "two.plane"
    for out in (out1, out2):
        assert run("downsample", "--input", label_path, "--factor", "4",
                   "--method", "epd", "--kind", "label", "--output", out) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert (tmp_path / "one.plane.json").read_bytes() == (tmp_path / "two.plane.json").read_bytes()


def test_console_module_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "epd", "--help"], capture_output=True, text=True
    )
    assert result.returncode == 0
    assert "downsample" in result.stdout


def test_pad_helper_reports_amounts():
    label = random_hard(np.random.default_rng(0), 10, 13, 2)
    padded, (pad_h, pad_w) = pad_to_multiple(label, 4)
    assert (pad_h, pad_w) == (2, 3)
    assert (padded.height, padded.width) == (12, 16)
    assert padded.data[10:, :].max() == 0
