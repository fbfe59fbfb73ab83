import re

import numpy as np
import pytest
from conftest import tiny_config

from pseudoloc.data import SyntheticRoom
from pseudoloc.data.sevenscenes import Frame
from pseudoloc.evaluate import build_report, evaluate_constant, evaluate_model, format_errors, predict_poses, render_table
from pseudoloc.geometry import CameraIntrinsics
from pseudoloc.models import build_model
from pseudoloc.pose import Pose, UnitQuaternion
from pseudoloc.train import FrameSource

K = CameraIntrinsics(60.0, 60.0, 39.5, 29.5, 80, 60)
FORMAT = re.compile(r"^\d+\.\d{2}m, \d+(\.\d+)?°$")


@pytest.fixture(scope="module")
def frames():
    return SyntheticRoom(2).frames([0.0, 0.2, 0.4, 0.6, 0.8], K)


def with_poses(frames, poses, scene=None):
    return [Frame(f.rgb, f.depth, p, scene or f.scene, f.sequence, f.index) for f, p in zip(frames, poses)]


@pytest.mark.parametrize("m,d,text", [
    (0.23, 8.06, "0.23m, 8.06°"),
    (0.35, 11.3, "0.35m, 11.3°"),
    (0.0, 0.0, "0.00m, 0.00°"),
    (1.234, 45.67, "1.23m, 45.7°"),
    (5.95, 176.7, "5.95m, 177°"),
])
def test_format_errors(m, d, text):
    assert format_errors(m, d) == text
    assert FORMAT.match(text)


def test_predictions_as_ground_truth_give_zero_error(frames):
    model = build_model(tiny_config("pointnet-pose"))
    preds = predict_poses(model, FrameSource(frames, K, 64))
    report = build_report(preds, with_poses(frames, preds))
    assert all(r["translation_m"] == 0.0 and r["rotation_deg"] == 0.0 for r in report["frames"])
    assert report["average"]["formatted"] == "0.00m, 0.00°"


def test_report_rows_and_medians(frames):
    model = build_model(tiny_config("pointnet-pose"))
    report = evaluate_model(model, FrameSource(frames, K, 64), label="tiny")
    assert report["label"] == "tiny"
    assert len(report["frames"]) == len(frames)
    t = [r["translation_m"] for r in report["frames"]]
    d = [r["rotation_deg"] for r in report["frames"]]
    (scene,) = report["scenes"]
    assert scene["median_translation_m"] == np.median(t)
    assert scene["median_rotation_deg"] == np.median(d)
    assert FORMAT.match(scene["formatted"])


def test_predictions_are_deterministic(frames):
    model = build_model(tiny_config("pointnet-pose"))
    src = FrameSource(frames, K, 64)
    a, b = predict_poses(model, src, seed=3), predict_poses(model, src, seed=3)
    assert all(np.array_equal(p.t, q.t) and p.q == q.q for p, q in zip(a, b))


def test_average_is_mean_of_scene_medians(frames):
    ident = Pose(np.zeros(3), UnitQuaternion.identity())
    shifted = [Pose(np.array([float(i), 0, 0]), UnitQuaternion.identity()) for i in range(5)]
    fr = with_poses(frames[:3], shifted[:3], "a") + with_poses(frames[3:], shifted[3:], "b")
    report = evaluate_constant(ident, fr)
    assert [s["median_translation_m"] for s in report["scenes"]] == [1.0, 3.5]
    assert report["average"]["median_translation_m"] == 2.25
    assert report["average"]["formatted"] == "2.25m, 0.00°"


def test_table_matches_json(frames):
    model = build_model(tiny_config("pointnet-pose"))
    reports = [evaluate_model(model, FrameSource(frames, K, 64)),
               evaluate_constant(Pose(np.zeros(3), UnitQuaternion.identity()), frames)]
    table = render_table(reports).splitlines()
    assert table[0].split()[0] == "Scene"
    assert len(table) == 1 + len(reports[0]["scenes"]) + 1
    cells = re.findall(r"\d+\.\d{2}m, \d+(?:\.\d+)?°", table[1])
    assert cells == [r["scenes"][0]["formatted"] for r in reports]
    assert table[-1].startswith("Average")
    assert re.findall(r"\d+\.\d{2}m, \d+(?:\.\d+)?°", table[-1]) == [r["average"]["formatted"] for r in reports]


def test_report_requires_matching_lengths(frames):
    with pytest.raises(ValueError):
        build_report([], frames)
