"""Per-frame pose errors, per-scene medians, and the ``Xm, Y°`` report table."""

import numpy as np

from .pose import Pose, median_errors, quat_exp, rotation_error, translation_error
from .train import FrameSource, eval_seeds


def format_errors(meters, degrees):
    """``"0.23m, 8.06°"``: meters to 2 decimals, degrees to 3 significant figures."""
    deg = f"{degrees:.0f}" if degrees >= 100 else f"{degrees:#.3g}"
    return f"{meters:.2f}m, {deg}°"


def predict_poses(model, source: FrameSource, seed=0, batch_size=8):
    """Test-mode predictions: center crops and seeded point sets."""
    poses = []
    n = len(source)
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        batch = source.batch(idx, model.inputs, eval_seeds(seed, idx), train_mode=False)
        pred_t, pred_logq = model.predict(batch)
        poses += [Pose(t, quat_exp(w)) for t, w in zip(pred_t.data, pred_logq.data)]
    return poses


def build_report(predictions, frames, label="model"):
    """JSON-ready report of per-frame errors, per-scene medians, and their average.

    The average row is the mean of the per-scene medians.
    """
    if len(predictions) != len(frames):
        raise ValueError("one prediction per frame is required")
    rows, by_scene = [], {}
    for pred, fr in zip(predictions, frames):
        err = (translation_error(pred, fr.pose), rotation_error(pred, fr.pose))
        rows.append({"scene": fr.scene, "sequence": fr.sequence, "index": fr.index,
                     "translation_m": err[0], "rotation_deg": err[1]})
        by_scene.setdefault(fr.scene, []).append(err)
    scenes = []
    for name in sorted(by_scene):
        m, d = median_errors(by_scene[name])
        scenes.append({"scene": name, "frames": len(by_scene[name]), "median_translation_m": m,
                       "median_rotation_deg": d, "formatted": format_errors(m, d)})
    avg_m = float(np.mean([s["median_translation_m"] for s in scenes]))
    avg_d = float(np.mean([s["median_rotation_deg"] for s in scenes]))
    return {
        "label": label,
        "frames": rows,
        "scenes": scenes,
        "average": {"median_translation_m": avg_m, "median_rotation_deg": avg_d,
                    "formatted": format_errors(avg_m, avg_d)},
    }


def evaluate_model(model, source: FrameSource, seed=0, label=None):
    return build_report(predict_poses(model, source, seed), source.frames, label or model.config.kind)


def evaluate_constant(pose: Pose, frames, label="mean pose"):
    return build_report([pose] * len(frames), frames, label)


def render_table(reports):
    """Aligned text table, one column per report; cells are the reports' formatted strings."""
    header = ["Scene"] + [r["label"] for r in reports]
    body = []
    for i, s in enumerate(reports[0]["scenes"]):
        body.append([s["scene"]] + [r["scenes"][i]["formatted"] for r in reports])
    body.append(["Average"] + [r["average"]["formatted"] for r in reports])
    table = [header] + body
    widths = [max(len(row[c]) for row in table) for c in range(len(header))]
    return "\n".join(
        "  ".join(cell.ljust(w) if c == 0 else cell.rjust(w) for c, (cell, w) in enumerate(zip(row, widths))).rstrip()
        for row in table
    ) + "\n"
