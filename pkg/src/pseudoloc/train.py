"""Minibatch training with Adam, JSON-lines metrics, checkpoints, and resume.

Everything random is derived from ``(seed, epoch, frame index)``, so a
run resumed from an epoch checkpoint continues bit-identically.
"""

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import autodiff as ad
from .data.preprocess import crop, frame_to_pointset, jet_image, resize_normalize
from .errors import NumericFailureError, RejectedInputError
from .geometry import SEVEN_SCENES_INTRINSICS, CameraIntrinsics
from .models import ModelConfig, build_model
from .pose import pose_loss, quat_log

_TRAIN_STREAM = 0
_EVAL_STREAM = 1


def sample_seed(*keys):
    """A 32-bit seed that is a pure function of non-negative integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


class FrameSource:
    """Network inputs and regression targets for a list of frames.

    Resized images are cached; point sets are re-drawn per seed.
    """

    def __init__(self, frames, k: CameraIntrinsics = SEVEN_SCENES_INTRINSICS, n_points=1024):
        if not frames:
            raise RejectedInputError("no frames to draw samples from")
        self.frames = list(frames)
        self.k = k
        self.n_points = n_points
        self._images = {}

    def __len__(self):
        return len(self.frames)

    def _resized(self, kind, i):
        key = (kind, i)
        if key not in self._images:
            fr = self.frames[i]
            rgb = fr.rgb if kind == "images" else jet_image(fr.depth)
            self._images[key] = resize_normalize(rgb)
        return self._images[key]

    def batch(self, indices, keys, seeds, train_mode):
        out = {}
        for key in keys:
            if key == "points":
                out[key] = np.stack([frame_to_pointset(self.frames[i], self.k, self.n_points, s)
                                     for i, s in zip(indices, seeds)])
            else:
                out[key] = np.stack([crop(self._resized(key, i), train_mode, s) for i, s in zip(indices, seeds)])
        return out

    def targets(self, indices):
        t = np.stack([self.frames[i].pose.t for i in indices])
        logq = np.stack([quat_log(self.frames[i].pose.q) for i in indices])
        return t, logq


@dataclass
class TrainConfig:
    seed: int = 0
    epochs: int = 100
    batch_size: int = 64
    lr: float = 1e-4
    weight_decay: float = 5e-4
    convergence_window: int = 10
    convergence_tol: float = 1e-3
    stop_on_convergence: bool = True
    # False feeds every epoch the fixed test-mode inputs (center crop, eval point draw)
    augment: bool = True
    # learning rate at step s is lr * lr_decay ** s
    lr_decay: float = 1.0

    def validate(self):
        if self.batch_size < 1:
            raise RejectedInputError("batch size must be >= 1")
        if self.epochs < 0:
            raise RejectedInputError("epochs must be >= 0")
        if self.lr <= 0 or self.weight_decay < 0:
            raise RejectedInputError("learning rate must be > 0 and weight decay >= 0")
        if not 0 < self.lr_decay <= 1:
            raise RejectedInputError("lr decay must lie in (0, 1]")
        if self.convergence_window < 1:
            raise RejectedInputError("convergence window must be >= 1")
        return self

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names}).validate()


def converged(losses, window=10, tol=1e-3):
    """True when the ``window``-epoch moving average improved by less than ``tol`` (relative)."""
    if len(losses) < window + 1:
        return False
    prev = float(np.mean(losses[-window - 1 : -1]))
    now = float(np.mean(losses[-window:]))
    return (prev - now) < tol * abs(prev)


class Trainer:
    def __init__(self, model, source: FrameSource, cfg: TrainConfig):
        self.model = model
        self.source = source
        self.cfg = cfg.validate()
        self.optimizer = ad.Adam(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
        self.epoch = 0
        self.history = []

    @property
    def steps(self):
        return self.optimizer.state.step

    def loss_on(self, indices, seeds, train_mode=True):
        """Graph loss and the two detached residual means for one batch."""
        batch = self.source.batch(indices, self.model.inputs, seeds, train_mode)
        true_t, true_logq = self.source.targets(indices)
        pred_t, pred_logq = self.model.predict(batch)
        loss = pose_loss(pred_t, pred_logq, true_t, true_logq, self.model.loss_weights)
        r_t = float(np.mean(np.abs(pred_t.data - true_t).sum(axis=-1)))
        r_q = float(np.mean(np.linalg.norm(pred_logq.data - true_logq, axis=-1)))
        return loss, r_t, r_q

    def run_epoch(self):
        """One pass over shuffled minibatches; returns and records the metrics line."""
        cfg, n = self.cfg, len(self.source)
        order = np.random.default_rng(sample_seed(cfg.seed, _TRAIN_STREAM, self.epoch)).permutation(n)
        sums = np.zeros(3)
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            if cfg.augment:
                seeds = [sample_seed(cfg.seed, _TRAIN_STREAM, self.epoch, i) for i in idx]
            else:
                seeds = eval_seeds(cfg.seed, idx)
            try:
                loss, r_t, r_q = self.loss_on(idx, seeds, train_mode=cfg.augment)
                ad.backward(loss)
            except NumericFailureError as exc:
                frames = [self.source.frames[i] for i in idx]
                names = ", ".join(f"{f.scene}/{f.sequence}/{f.index}" for f in frames[:4])
                raise NumericFailureError(
                    f"non-finite value in epoch {self.epoch} batch {b} (frames {names}): {exc}"
                ) from exc
            self.optimizer.state.lr = cfg.lr * cfg.lr_decay ** self.steps
            self.optimizer.step()
            sums += len(idx) * np.array([float(loss.data), r_t, r_q])
        means = sums / n
        record = {
            "epoch": self.epoch,
            "steps": self.steps,
            "loss": means[0],
            "translation_residual": means[1],
            "rotation_residual": means[2],
            "beta": float(self.model.loss_weights.beta.data),
            "gamma": float(self.model.loss_weights.gamma.data),
        }
        self.epoch += 1
        self.history.append(record)
        return record

    def is_converged(self):
        return converged([r["loss"] for r in self.history], self.cfg.convergence_window, self.cfg.convergence_tol)

    def fit(self, metrics_path=None, checkpoint_path=None, metadata=None):
        """Train until ``cfg.epochs`` total epochs or convergence; returns the new records."""
        new = []
        while self.epoch < self.cfg.epochs:
            rec = self.run_epoch()
            new.append(rec)
            if metrics_path is not None:
                with open(metrics_path, "a") as f:
                    f.write(json.dumps(rec, sort_keys=True) + "\n")
            if checkpoint_path is not None:
                self.save(checkpoint_path, metadata)
            if self.cfg.stop_on_convergence and self.is_converged():
                break
        return new

    def save(self, path, metadata=None):
        arrays = {f"model/{k}": v for k, v in self.model.state_dict().items()}
        arrays.update(self.optimizer.state_arrays())
        meta = {
            "model_config": self.model.config.to_dict(),
            "train_config": asdict(self.cfg),
            "epoch": self.epoch,
            "adam": self.optimizer.state_meta(),
            "history": self.history,
        }
        meta.update(metadata or {})
        return ad.save_checkpoint(path, arrays, meta)

    @classmethod
    def resume(cls, path, source: FrameSource, cfg: TrainConfig | None = None):
        """Rebuild model, optimizer, and epoch counter from a checkpoint.

        ``cfg`` may extend ``epochs``; other training settings must match
        the checkpoint's.
        """
        arrays, meta = ad.load_checkpoint(path)
        saved = TrainConfig.from_dict(meta["train_config"])
        if cfg is not None:
            a, b = asdict(saved), asdict(cfg)
            a.pop("epochs"), b.pop("epochs")
            if a != b:
                diff = sorted(k for k in a if a[k] != b[k])
                raise RejectedInputError(f"training settings differ from the checkpoint: {diff}")
            saved.epochs = cfg.epochs
        model = load_model(arrays, meta)
        trainer = cls(model, source, saved)
        trainer.optimizer.load_state(arrays, meta["adam"])
        trainer.epoch = int(meta["epoch"])
        trainer.history = list(meta["history"])
        return trainer


def load_model(arrays, meta, expected: ModelConfig | None = None):
    """Model from checkpoint contents; a differing ``expected`` config is rejected."""
    cfg = ModelConfig.from_dict(meta["model_config"])
    if expected is not None and expected.to_dict() != cfg.to_dict():
        raise RejectedInputError("model config does not match the checkpoint")
    model = build_model(cfg)
    prefix = "model/"
    model.load_state_dict({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})
    return model


def eval_seeds(seed, indices):
    return [sample_seed(seed, _EVAL_STREAM, i) for i in indices]
