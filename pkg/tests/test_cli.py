import filecmp
import json
import re

import numpy as np
import pytest
from conftest import tiny_config

from pseudoloc.cli import code_version, main
from pseudoloc.data import load_frame, load_scene_split
from pseudoloc.data.sevenscenes import write_depth_png
from pseudoloc.geometry import CameraIntrinsics, DepthMap, depth_to_pointcloud
from pseudoloc.models import save_config
from pseudoloc.ply import read_ply

SMALL = "60,60,39.5,29.5,80,60"
K = CameraIntrinsics(60.0, 60.0, 39.5, 29.5, 80, 60)
ERROR_LINE = re.compile(r"^error: [a-z-]+: \S.*$")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def assert_one_error_line(err, category):
    lines = err.strip().splitlines()
    assert len(lines) == 1 and ERROR_LINE.match(lines[0])
    assert lines[0].startswith(f"error: {category}: ")


@pytest.fixture
def tiny_toml(tmp_path):
    path = tmp_path / "tiny.toml"
    save_config(tiny_config("pointnet-pose"), path)
    return path


def test_synth_layout_and_determinism(tmp_path, capsys):
    for name in ("a", "b"):
        code, out, _ = run(capsys, "synth", "--seed", 4, "--n-frames", 3, "--n-test", 2,
                           "--intrinsics", SMALL, "--out", tmp_path / name)
        assert code == 0 and "3 training and 2 test frames" in out
    a, b = tmp_path / "a", tmp_path / "b"
    for seq, n in (("seq-01", 3), ("seq-02", 2)):
        for kind in ("color.png", "depth.png", "pose.txt"):
            files = sorted((a / seq).glob(f"*.{kind}"))
            assert len(files) == n
            for f in files:
                assert filecmp.cmp(f, b / seq / f.name, shallow=False)
    split = load_scene_split(a)
    assert len(split.train) == 3 and len(split.test) == 2
    p = split.train[0]
    load_frame(p.rgb, p.depth, p.pose, K)
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["seed"] == 4 and manifest["code_version"] == code_version()


def test_train_then_eval(tmp_path, capsys, tiny_toml):
    common = ["--synthetic", "--seed", 1, "--n-frames", 6, "--n-test", 2, "--intrinsics", SMALL]
    code, out, _ = run(capsys, "train", *common, "--config", tiny_toml, "--epochs", 2,
                       "--batch-size", 3, "--lr", 1e-3, "--out", tmp_path / "run")
    assert code == 0 and "after 2 epochs (4 steps)" in out
    run_dir = tmp_path / "run"
    metrics = [json.loads(x) for x in (run_dir / "metrics.jsonl").read_text().splitlines()]
    assert [m["epoch"] for m in metrics] == [0, 1]
    assert all("beta" in m and "gamma" in m for m in metrics)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["seed"] == 1 and manifest["train_config"]["batch_size"] == 3
    assert (run_dir / "model.toml").exists()

    # resume for one more epoch
    code, out, _ = run(capsys, "train", *common, "--epochs", 3, "--batch-size", 3, "--lr", 1e-3,
                       "--checkpoint", run_dir / "checkpoint.ckpt", "--out", tmp_path / "run2")
    assert code == 0 and "after 3 epochs (6 steps)" in out

    code, out, _ = run(capsys, "eval", *common, "--checkpoint", run_dir / "checkpoint.ckpt",
                       "--config", tiny_toml, "--out", tmp_path / "ev")
    assert code == 0
    report = json.loads((tmp_path / "ev" / "report.json").read_text())["reports"]
    assert [r["label"] for r in report] == ["pointnet-pose", "mean pose"]
    assert len(report[0]["frames"]) == 2
    table = (tmp_path / "ev" / "report.txt").read_text()
    assert table == out
    assert report[0]["average"]["formatted"] in table.splitlines()[-1]


def test_eval_rejects_mismatched_config(tmp_path, capsys, tiny_toml):
    common = ["--synthetic", "--n-frames", 3, "--n-test", 1, "--intrinsics", SMALL]
    run(capsys, "train", *common, "--config", tiny_toml, "--epochs", 1, "--batch-size", 3, "--out", tmp_path / "r")
    other = tmp_path / "other.toml"
    save_config(tiny_config("pointnet-pose", seed=5), other)
    code, _, err = run(capsys, "eval", *common, "--checkpoint", tmp_path / "r" / "checkpoint.ckpt",
                       "--config", other, "--out", tmp_path / "ev")
    assert code == 2
    assert_one_error_line(err, "rejected-input")


def write_depth(path, mm):
    valid = (mm != 0) & (mm != 65535)
    write_depth_png(path, DepthMap(np.where(valid, mm / 1000.0, 0.0), valid))


def test_convert_round_trip(tmp_path, capsys, mini_scene, mini_expected):
    depth = mini_scene / "seq-01" / "frame-000000.depth.png"
    out = tmp_path / "out" / "cloud.ply"
    code, _, _ = run(capsys, "convert", depth, "--intrinsics", "5,5,3.5,2.5,8,6", "--out", out)
    assert code == 0
    pts, colors = read_ply(out)
    raw = np.array(mini_expected["frames"][0]["depth_raw"])
    valid = (raw != 0) & (raw != 65535)
    assert pts.shape == (valid.sum(), 3) and colors is None
    oracle = depth_to_pointcloud(DepthMap(np.where(valid, raw / 1000.0, 0.0), valid), mini_expected["k"])
    np.testing.assert_allclose(pts, oracle, rtol=1e-6, atol=1e-9)
    assert json.loads((tmp_path / "out" / "cloud.ply.manifest.json").read_text())["vertices"] == valid.sum()


def test_convert_all_invalid_writes_nothing(tmp_path, capsys):
    depth = tmp_path / "empty.depth.png"
    write_depth(depth, np.zeros((6, 8), dtype=np.int64))
    out = tmp_path / "cloud.ply"
    code, _, err = run(capsys, "convert", depth, "--intrinsics", "5,5,3.5,2.5,8,6", "--out", out)
    assert code == 2 and not out.exists()
    assert_one_error_line(err, "degenerate-input")


def test_convert_missing_file_names_it(tmp_path, capsys):
    code, _, err = run(capsys, "convert", tmp_path / "nope.png", "--out", tmp_path / "x.ply")
    assert code == 2
    assert_one_error_line(err, "ingestion")
    assert "nope.png" in err


def test_smear_step_and_constant(tmp_path, capsys):
    means = {}
    for ks in (3, 11):
        code, _, _ = run(capsys, "smear", "--step", "--kernel", ks, "--out", tmp_path / f"s{ks}")
        assert code == 0
        res = json.loads((tmp_path / f"s{ks}" / "smear.json").read_text())
        means[ks] = res["mean_displacement_m"]
        orig, _ = read_ply(tmp_path / f"s{ks}" / "original.ply")
        conv, _ = read_ply(tmp_path / f"s{ks}" / "convolved.ply")
        assert orig.shape == conv.shape == (640 * 480, 3)
    assert means[11] > 0.01 and means[3] <= means[11]
    depth = tmp_path / "flat.depth.png"
    write_depth(depth, np.full((6, 8), 2000))
    code, _, _ = run(capsys, "smear", depth, "--intrinsics", "5,5,3.5,2.5,8,6", "--out", tmp_path / "flat")
    assert code == 0
    assert json.loads((tmp_path / "flat" / "smear.json").read_text())["mean_displacement_m"] < 1e-9


def test_smear_rejects_even_kernel(tmp_path, capsys):
    code, _, err = run(capsys, "smear", "--step", "--kernel", 4, "--out", tmp_path / "s")
    assert code == 2
    assert_one_error_line(err, "rejected-input")


def test_train_without_data_source(tmp_path, capsys):
    code, _, err = run(capsys, "train", "--out", tmp_path / "r")
    assert code == 2
    assert_one_error_line(err, "rejected-input")
    code, _, err = run(capsys, "train", "--data-root", tmp_path / "missing", "--out", tmp_path / "r")
    assert code == 2
    assert_one_error_line(err, "ingestion")


def test_usage_errors_are_one_line(capsys):
    with pytest.raises(SystemExit) as e:
        main(["train", "--batch-size", "x", "--out", "o"])
    assert e.value.code == 2
    assert_one_error_line(capsys.readouterr().err, "usage")
    with pytest.raises(SystemExit):
        main(["convert", "d.png", "--intrinsics", "1,2,3", "--out", "o"])
    assert_one_error_line(capsys.readouterr().err, "usage")
