"""Command-line entry point: train, eval, convert, smear, synth.

Failures print one line, ``error: <category>: <message>``, and exit with
status 2.
"""

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, is_dataclass
from pathlib import Path

from . import __version__
from .autodiff import load_checkpoint
from .data import (
    depth_from_millimeters,
    load_frames,
    load_scene_split,
    read_depth_png,
    synth_split,
    write_sequence,
    write_split,
)
from .errors import DegenerateInputError, IngestionError, PseudolocError, RejectedInputError
from .evaluate import evaluate_constant, evaluate_model, render_table
from .geometry import SEVEN_SCENES_INTRINSICS, CameraIntrinsics, depth_to_pointcloud, smear_experiment, step_depth
from .models import MODEL_KINDS, ModelConfig, build_model, default_config, load_config, save_config
from .ply import write_ply
from .pose import mean_pose
from .train import FrameSource, Trainer, TrainConfig, load_model

EXIT_FAILURE = 2


def code_version():
    """Package version plus a digest of the package sources."""
    h = hashlib.sha256()
    root = Path(__file__).parent
    for p in sorted(root.rglob("*")):
        if p.suffix in (".py", ".pyx") and "__pycache__" not in p.parts:
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return f"{__version__}+{h.hexdigest()[:12]}"


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if is_dataclass(v):
        return asdict(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def write_manifest(path, command, args, extra=None):
    manifest = {
        "command": command,
        "code_version": code_version(),
        "seed": getattr(args, "seed", None),
        "args": {k: v for k, v in vars(args).items() if k != "func"},
    }
    manifest.update(extra or {})
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n")


def parse_intrinsics(text):
    """``fu,fv,cu,cv[,width,height]``; size defaults to 640x480."""
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"intrinsics must be comma-separated numbers: {text!r}") from None
    if len(vals) not in (4, 6):
        raise argparse.ArgumentTypeError("intrinsics take 4 or 6 values: fu,fv,cu,cv[,width,height]")
    w, h = (int(vals[4]), int(vals[5])) if len(vals) == 6 else (640, 480)
    return CameraIntrinsics(*vals[:4], w, h)


def _scene_dirs(root, scenes):
    root = Path(root)
    if not root.is_dir():
        raise IngestionError(root, "data root does not exist")
    if (root / "TrainSplit.txt").exists():
        return [root]
    names = scenes or sorted(p.name for p in root.iterdir() if (p / "TrainSplit.txt").exists())
    if not names:
        raise IngestionError(root, "no scene folders with split lists found")
    return [root / n for n in names]


def load_dataset(args):
    """``(train_frames, test_frames)`` from the data root or a synthetic room."""
    if args.synthetic:
        return synth_split(args.seed, args.n_frames, args.n_test, args.intrinsics)
    if args.data_root is None:
        raise RejectedInputError("pass --data-root or --synthetic")
    train, test = [], []
    for scene in _scene_dirs(args.data_root, args.scenes):
        split = load_scene_split(scene)
        train += load_frames(split.train, args.intrinsics)
        test += load_frames(split.test, args.intrinsics)
    return train, test


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args):
    out = _out_dir(args.out)
    train, _ = load_dataset(args)
    tcfg = TrainConfig(seed=args.seed, epochs=args.epochs, batch_size=args.batch_size,
                       lr=args.lr, weight_decay=args.weight_decay)
    if args.checkpoint:
        _, meta = load_checkpoint(args.checkpoint)
        n_points = ModelConfig.from_dict(meta["model_config"]).point.n_points
        trainer = Trainer.resume(args.checkpoint, FrameSource(train, args.intrinsics, n_points), tcfg)
    else:
        mcfg = load_config(args.config) if args.config else default_config(args.model, args.seed)
        source = FrameSource(train, args.intrinsics, mcfg.point.n_points)
        trainer = Trainer(build_model(mcfg), source, tcfg)
    save_config(trainer.model.config, out / "model.toml")
    write_manifest(out / "manifest.json", "train", args, {
        "model_config": trainer.model.config.to_dict(),
        "train_config": asdict(trainer.cfg),
        "train_frames": len(train),
        "start_epoch": trainer.epoch,
    })
    trainer.fit(out / "metrics.jsonl", out / "checkpoint.ckpt", {"code_version": code_version()})
    last = trainer.history[-1] if trainer.history else None
    state = "converged" if trainer.is_converged() else "stopped"
    print(f"{state} after {trainer.epoch} epochs ({trainer.steps} steps)"
          + (f", loss {last['loss']:.4f}, beta {last['beta']:.4f}, gamma {last['gamma']:.4f}" if last else ""))
    return 0


def cmd_eval(args):
    out = _out_dir(args.out)
    arrays, meta = load_checkpoint(args.checkpoint)
    expected = load_config(args.config) if args.config else None
    model = load_model(arrays, meta, expected)
    train, test = load_dataset(args)
    if not test:
        raise DegenerateInputError("test split is empty")
    source = FrameSource(test, args.intrinsics, model.config.point.n_points)
    reports = [evaluate_model(model, source, args.seed)]
    if train:
        reports.append(evaluate_constant(mean_pose([f.pose for f in train]), test))
    table = render_table(reports)
    (out / "report.json").write_text(json.dumps({"reports": reports}, indent=2) + "\n")
    (out / "report.txt").write_text(table)
    write_manifest(out / "manifest.json", "eval", args, {"model_config": model.config.to_dict(),
                                                         "test_frames": len(test)})
    print(table, end="")
    return 0


def _read_depth(path):
    return depth_from_millimeters(read_depth_png(path))


def cmd_convert(args):
    depth = _read_depth(args.depth)
    k = args.intrinsics
    if depth.depth.shape != (k.height, k.width):
        raise RejectedInputError(f"depth is {depth.width}x{depth.height}, intrinsics expect {k.width}x{k.height}")
    cloud = depth_to_pointcloud(depth, k)
    if cloud.shape[0] == 0:
        raise DegenerateInputError(f"{args.depth}: depth image has no valid pixels")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_ply(out, cloud)
    write_manifest(out.with_name(out.name + ".manifest.json"), "convert", args, {"vertices": int(cloud.shape[0])})
    print(f"wrote {cloud.shape[0]} points to {out}")
    return 0


def cmd_smear(args):
    k = args.intrinsics
    if args.step:
        depth = step_depth(k)
    elif args.depth is not None:
        depth = _read_depth(args.depth)
    else:
        raise RejectedInputError("pass a depth PNG or --step")
    if depth.depth.shape != (k.height, k.width):
        raise RejectedInputError(f"depth is {depth.width}x{depth.height}, intrinsics expect {k.width}x{k.height}")
    if not depth.valid.any():
        raise DegenerateInputError("depth image has no valid pixels")
    original, smeared, (mean_d, max_d) = smear_experiment(depth, k, args.kernel)
    out = _out_dir(args.out)
    write_ply(out / "original.ply", original)
    write_ply(out / "convolved.ply", smeared)
    metric = {"kernel": args.kernel, "points": int(original.shape[0]),
              "mean_displacement_m": mean_d, "max_displacement_m": max_d}
    (out / "smear.json").write_text(json.dumps(metric, indent=2) + "\n")
    write_manifest(out / "manifest.json", "smear", args)
    print(f"kernel {args.kernel}: mean displacement {mean_d:.6g} m, max {max_d:.6g} m")
    return 0


def cmd_synth(args):
    out = _out_dir(args.out)
    train, test = synth_split(args.seed, args.n_frames, args.n_test, args.intrinsics)
    write_sequence(train, out / "seq-01")
    seqs_test = []
    if test:
        write_sequence(test, out / "seq-02")
        seqs_test = ["seq-02"]
    write_split(out, ["seq-01"], seqs_test)
    write_manifest(out / "manifest.json", "synth", args, {"train_frames": len(train), "test_frames": len(test)})
    print(f"wrote {len(train)} training and {len(test)} test frames to {out}")
    return 0


def _add_common(p, seed=True):
    p.add_argument("--intrinsics", type=parse_intrinsics, default=SEVEN_SCENES_INTRINSICS,
                   help="fu,fv,cu,cv[,width,height] (default: 585,585,320,240,640,480)")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _add_data(p):
    p.add_argument("--data-root", type=Path, help="dataset root or a single scene folder")
    p.add_argument("--scenes", nargs="*", help="scene folder names under the data root")
    p.add_argument("--synthetic", action="store_true", help="use a generated room seeded by --seed")
    p.add_argument("--n-frames", type=int, default=50, help="synthetic training frames")
    p.add_argument("--n-test", type=int, default=10, help="synthetic held-out frames")


class _Parser(argparse.ArgumentParser):
    """Reports usage errors in the same one-line format as runtime failures."""

    def error(self, message):
        self.exit(EXIT_FAILURE, _error_line("usage", f"{self.prog}: {message}") + "\n")


def build_parser():
    parser = _Parser(prog="pseudoloc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a pose regressor")
    _add_common(p)
    _add_data(p)
    p.add_argument("--model", choices=MODEL_KINDS, default="fusionloc")
    p.add_argument("--config", type=Path, help="model config TOML (overrides --model)")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--weight-decay", type=float, default=5e-4)
    p.add_argument("--checkpoint", type=Path, help="resume from this checkpoint")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="median pose errors on the test split")
    _add_common(p)
    _add_data(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--config", type=Path, help="reject the checkpoint unless its config matches")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("convert", help="lift a depth PNG to an ASCII PLY point cloud")
    _add_common(p, seed=False)
    p.add_argument("depth", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("smear", help="compare clouds lifted before and after a box convolution")
    _add_common(p, seed=False)
    p.add_argument("depth", type=Path, nargs="?")
    p.add_argument("--step", action="store_true", help="use the two-plane 1 m / 3 m step scene")
    p.add_argument("--kernel", type=int, default=11)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_smear)

    p = sub.add_parser("synth", help="write a synthetic room in the 7 Scenes layout")
    _add_common(p)
    p.add_argument("--n-frames", type=int, default=50)
    p.add_argument("--n-test", type=int, default=10)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def _error_line(category, exc):
    return f"error: {category}: {' '.join(str(exc).split())}"


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PseudolocError as exc:
        print(_error_line(exc.category, exc), file=sys.stderr)
    except OSError as exc:
        print(_error_line("io", exc), file=sys.stderr)
    except ValueError as exc:
        print(_error_line("rejected-input", exc), file=sys.stderr)
    except FloatingPointError as exc:
        print(_error_line("numeric-failure", exc), file=sys.stderr)
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
