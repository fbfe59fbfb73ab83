"""Point stream, RGB stream, attention, and the three pose regressors.

Forwards take batched inputs, points (B, N, 3) and images (B, 3, S, S),
and return (B, ...) outputs. Unbatched inputs give unbatched outputs.
"""

import numpy as np

from .. import autodiff as ad
from .. import kernels
from ..errors import RejectedInputError
from ..pose import LossWeights
from .config import ModelConfig


def canonical_order(points):
    """Lexicographic (x, y, z) row order.

    Sampling ties are broken by index, so sorting first makes the whole
    stream exactly invariant to the input order.
    """
    order = np.lexsort((points[:, 2], points[:, 1], points[:, 0]))
    return points[order]


class PointStream(ad.Module):
    """Set abstraction layers, a shared perceptron ``h``, max pooling, then ``theta``.

    There is no input or feature transform: absolute camera-frame
    coordinates reach ``h`` so rigid motions of the cloud change the feature.
    """

    def __init__(self, cfg, rng):
        self.cfg = cfg
        self.sa = []
        c = 0
        for layer in cfg.sa_layers:
            self.sa.append(ad.MLP(rng, 3 + c, layer.widths))
            c = layer.widths[-1]
        self.h = ad.MLP(rng, 3 + c, cfg.global_widths)
        self.theta = ad.MLP(rng, cfg.global_widths[-1], list(cfg.head_widths) + [cfg.feature_dim], final_relu=False)

    def _group(self, xyz, layer, layer_no):
        b = xyz.shape[0]
        start = int(np.random.default_rng(self.cfg.fps_seed + layer_no).integers(xyz.shape[1]))
        cidx = np.empty((b, layer.n_centroids), dtype=np.int64)
        gidx = np.empty((b, layer.n_centroids, layer.k), dtype=np.int64)
        for i in range(b):
            cidx[i] = kernels.farthest_point_sample(xyz[i], layer.n_centroids, start)
            gidx[i] = kernels.ball_query(xyz[i], cidx[i], layer.radius, layer.k)
        new_xyz = np.take_along_axis(xyz, cidx[:, :, None], axis=1)
        rel = np.take_along_axis(xyz[:, None, :, :], gidx[..., None], axis=2) - new_xyz[:, :, None, :]
        return new_xyz, gidx, rel

    def __call__(self, points):
        points = np.asarray(points, dtype=np.float64)
        single = points.ndim == 2
        if single:
            points = points[None]
        if points.ndim != 3 or points.shape[1:] != (self.cfg.n_points, 3):
            raise RejectedInputError(
                f"point stream expects (B, {self.cfg.n_points}, 3) points, got {points.shape}"
            )
        xyz = np.stack([canonical_order(p) for p in points])
        feats = None
        for layer_no, (layer, mlp) in enumerate(zip(self.cfg.sa_layers, self.sa)):
            new_xyz, gidx, rel = self._group(xyz, layer, layer_no)
            grouped = ad.Tensor(rel) if feats is None else ad.concat([rel, ad.gather(feats, gidx)], axis=-1)
            feats = ad.max_over_set(mlp(grouped), axis=2)
            xyz = new_xyz
        g = self.h(ad.concat([xyz, feats], axis=-1) if feats is not None else ad.Tensor(xyz))
        out = self.theta(ad.max_over_set(g, axis=1))
        return ad.reshape(out, (self.cfg.feature_dim,)) if single else out


class SelfAttention(ad.Module):
    """Self-attention over the C entries of a feature vector, with a residual.

    Each entry is a position: scores ``S_ij = (W_theta x)_i (W_phi x)_j``,
    ``y = softmax_rows(S) (W_g x)``, output ``x + y``. Weights are stored
    transposed so the maps apply as ``x @ W``.
    """

    def __init__(self, rng, c):
        self.w_theta = ad.Parameter(ad.kaiming_uniform(rng, (c, c), c))
        self.w_phi = ad.Parameter(ad.kaiming_uniform(rng, (c, c), c))
        self.w_g = ad.Parameter(ad.kaiming_uniform(rng, (c, c), c))

    def __call__(self, x):
        x = ad.as_tensor(x)
        if x.ndim == 1:
            return ad.reshape(self(ad.reshape(x, (1, -1))), x.shape)
        b, c = x.shape
        theta = ad.reshape(ad.matmul(x, self.w_theta), (b, c, 1))
        phi = ad.reshape(ad.matmul(x, self.w_phi), (b, 1, c))
        attn = ad.softmax(ad.matmul(theta, phi), axis=-1)
        g = ad.reshape(ad.matmul(x, self.w_g), (b, c, 1))
        return x + ad.reshape(ad.matmul(attn, g), (b, c))


class RgbStream(ad.Module):
    """Strided conv encoder (or precomputed features) -> FC -> ReLU -> optional attention."""

    def __init__(self, cfg, rng):
        self.cfg = cfg
        self.convs = []
        if cfg.precomputed_dim:
            fc_in = cfg.precomputed_dim
        else:
            c = 3
            for width in cfg.encoder_channels:
                self.convs.append(ad.Conv2d(rng, c, width, kernel_size=3, stride=2, padding=1))
                c = width
            fc_in = c * cfg.encoder_output_size() ** 2
        self.fc = ad.Linear(rng, fc_in, cfg.feature_dim)
        self.attention = SelfAttention(rng, cfg.feature_dim) if cfg.attention else None

    def encode(self, images):
        """Feature before attention."""
        x = ad.as_tensor(images)
        if self.cfg.precomputed_dim:
            if x.ndim not in (1, 2) or x.shape[-1] != self.cfg.precomputed_dim:
                raise RejectedInputError(f"expected {self.cfg.precomputed_dim}-dim precomputed features, got {x.shape}")
            return self.fc(x, relu=True)
        s = self.cfg.image_size
        single = x.ndim == 3
        if single:
            x = ad.reshape(x, (1,) + x.shape)
        if x.ndim != 4 or x.shape[1:] != (3, s, s):
            raise RejectedInputError(f"rgb stream expects (B, 3, {s}, {s}) images, got {x.shape}")
        for conv in self.convs:
            x = ad.relu(conv(x))
        x = ad.reshape(x, (-1,) if single else (x.shape[0], -1))
        return self.fc(x, relu=True)

    def __call__(self, images):
        f = self.encode(images)
        return self.attention(f) if self.attention is not None else f


class PoseRegressor(ad.Module):
    """Common surface: ``predict(batch) -> (t, logq)`` graph tensors of shape (B, 3)."""

    inputs = ()

    def __init__(self, cfg: ModelConfig):
        self.config = cfg.validate()
        self.loss_weights = LossWeights(cfg.beta_init, cfg.gamma_init)

    def network_parameters(self):
        return [p for n, p in self.named_parameters() if not n.startswith("loss_weights.")]


class FusionLoc(PoseRegressor):
    inputs = ("images", "points")

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg)
        rng = np.random.default_rng(cfg.seed)
        self.rgb = RgbStream(cfg.rgb, rng)
        self.point = PointStream(cfg.point, rng)
        self.head = ad.MLP(rng, cfg.rgb.feature_dim + cfg.point.feature_dim, cfg.head_widths)
        self.fc_t = ad.Linear(rng, self.head.out_dim, 3)
        self.fc_q = ad.Linear(rng, self.head.out_dim, 3)

    def fusion_head(self, f_rgb, f_pc):
        h = self.head(ad.concat([f_rgb, f_pc], axis=-1))
        return self.fc_t(h), self.fc_q(h)

    def predict(self, batch):
        return self.fusion_head(self.rgb(batch["images"]), self.point(batch["points"]))


class PointNetPose(PoseRegressor):
    inputs = ("points",)

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg)
        rng = np.random.default_rng(cfg.seed)
        self.point = PointStream(cfg.point, rng)
        self.fc_t = ad.Linear(rng, cfg.point.feature_dim, 3)
        self.fc_q = ad.Linear(rng, cfg.point.feature_dim, 3)

    def predict(self, batch):
        f = self.point(batch["points"])
        return self.fc_t(f), self.fc_q(f)


class DepthPoseNet(PoseRegressor):
    """Conv encoder over jet-colored depth, then the regression heads."""

    inputs = ("jet",)

    def __init__(self, cfg: ModelConfig):
        super().__init__(cfg)
        rng = np.random.default_rng(cfg.seed)
        self.rgb = RgbStream(cfg.rgb, rng)
        self.fc_t = ad.Linear(rng, cfg.rgb.feature_dim, 3)
        self.fc_q = ad.Linear(rng, cfg.rgb.feature_dim, 3)

    def predict(self, batch):
        f = self.rgb(batch["jet"])
        return self.fc_t(f), self.fc_q(f)


_KINDS = {"fusionloc": FusionLoc, "pointnet-pose": PointNetPose, "depth-posenet": DepthPoseNet}


def build_model(cfg: ModelConfig) -> PoseRegressor:
    return _KINDS[cfg.validate().kind](cfg)


def default_config(kind="fusionloc", seed=0) -> ModelConfig:
    cfg = ModelConfig(kind=kind, seed=seed)
    if kind == "depth-posenet":
        # the depth baseline regresses straight from the encoder feature
        cfg.rgb.attention = False
    return cfg.validate()
