"""Pinhole back-projection of depth maps and the depth-smearing experiment.

Point clouds are plain ``(N, 3)`` float64 arrays in the camera frame
(x right, y down, z forward), in meters.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInputError, RejectedInputError


@dataclass(frozen=True)
class CameraIntrinsics:
    f_u: float
    f_v: float
    c_u: float
    c_v: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.f_u > 0 and self.f_v > 0):
            raise RejectedInputError(f"focal lengths must be positive, got {self.f_u}, {self.f_v}")
        if not (0 <= self.c_u < self.width and 0 <= self.c_v < self.height):
            raise RejectedInputError(
                f"principal point ({self.c_u}, {self.c_v}) outside {self.width}x{self.height} image"
            )


# Community-standard calibration for the Kinect v1 depth camera.
SEVEN_SCENES_INTRINSICS = CameraIntrinsics(585.0, 585.0, 320.0, 240.0, 640, 480)


@dataclass
class DepthMap:
    """Metric depth (H, W) with a boolean validity mask of the same shape."""

    depth: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.depth.ndim != 2 or self.depth.shape != self.valid.shape:
            raise RejectedInputError(
                f"depth {self.depth.shape} and mask {self.valid.shape} must be matching 2-D arrays"
            )
        d = self.depth[self.valid]
        if not (np.all(np.isfinite(d)) and np.all(d >= 0)):
            raise RejectedInputError("valid depth values must be finite and non-negative")

    @classmethod
    def from_array(cls, depth):
        """Mask is ``depth > 0`` and finite."""
        depth = np.asarray(depth, dtype=np.float64)
        valid = np.isfinite(depth) & (depth > 0)
        return cls(np.where(valid, depth, 0.0), valid)

    @property
    def height(self):
        return self.depth.shape[0]

    @property
    def width(self):
        return self.depth.shape[1]


def depth_to_pointcloud(depth: DepthMap, k: CameraIntrinsics) -> np.ndarray:
    """Lift every valid pixel to a 3D point, in row-major pixel order."""
    if (depth.width, depth.height) != (k.width, k.height):
        raise RejectedInputError(
            f"depth is {depth.width}x{depth.height} but intrinsics expect {k.width}x{k.height}"
        )
    v, u = np.nonzero(depth.valid)
    z = depth.depth[v, u]
    x = z * (u - k.c_u) / k.f_u
    y = z * (v - k.c_v) / k.f_v
    return np.stack([x, y, z], axis=1)


def project(points: np.ndarray, k: CameraIntrinsics) -> np.ndarray:
    """Pixel coordinates (N, 2) as (u, v) of camera-frame points."""
    points = np.asarray(points, dtype=np.float64)
    z = points[:, 2]
    return np.stack([points[:, 0] * k.f_u / z + k.c_u, points[:, 1] * k.f_v / z + k.c_v], axis=1)


def convolve_depth(depth: DepthMap, kernel_size: int) -> DepthMap:
    """Box-average each valid pixel over its valid, in-bounds neighborhood.

    Borders shrink the window instead of zero padding, so edge pixels are
    not dragged toward the camera. The validity mask is carried over.
    """
    if kernel_size < 3 or kernel_size % 2 == 0:
        raise RejectedInputError(f"kernel_size must be odd and >= 3, got {kernel_size}")
    out = kernels.box_filter_valid(depth.depth, depth.valid, int(kernel_size))
    return DepthMap(out, depth.valid.copy())


def smear_metric(original: np.ndarray, convolved: np.ndarray) -> tuple[float, float]:
    """Mean and max per-index displacement between two aligned clouds."""
    original = np.asarray(original, dtype=np.float64)
    convolved = np.asarray(convolved, dtype=np.float64)
    if original.shape != convolved.shape:
        raise RejectedInputError(f"clouds are not index-aligned: {original.shape} vs {convolved.shape}")
    if original.shape[0] == 0:
        return 0.0, 0.0
    d = np.linalg.norm(convolved - original, axis=1)
    return float(d.mean()), float(d.max())


def _jet(x):
    x = np.asarray(x, dtype=np.float64)
    r = np.clip(1.5 - np.abs(4.0 * x - 3.0), 0.0, 1.0)
    g = np.clip(1.5 - np.abs(4.0 * x - 2.0), 0.0, 1.0)
    b = np.clip(1.5 - np.abs(4.0 * x - 1.0), 0.0, 1.0)
    return np.stack([r, g, b], axis=-1)


def jet_colormap(depth: DepthMap) -> np.ndarray:
    """False-color (H, W, 3) uint8 rendering; invalid pixels are black.

    Depth is normalized to [0, 1] over the valid range, so the nearest
    surface is dark blue (0, 0, 128) and the farthest dark red (128, 0, 0).
    """
    d = depth.depth[depth.valid]
    if d.size == 0:
        raise DegenerateInputError("depth map has no valid pixels")
    lo, hi = d.min(), d.max()
    if not hi > lo:
        raise DegenerateInputError("depth map is constant over its valid pixels")
    x = np.clip((depth.depth - lo) / (hi - lo), 0.0, 1.0)
    rgb = np.rint(_jet(x) * 255.0).astype(np.uint8)
    rgb[~depth.valid] = 0
    return rgb


def step_depth(
    k: CameraIntrinsics, near: float = 1.0, far: float = 3.0, edge: int | None = None, vertical: bool = False
) -> DepthMap:
    """Two fronto-parallel planes meeting at a depth discontinuity.

    By default the edge is horizontal: rows above ``edge`` (default the
    middle row) see the near plane, the rest the far plane. ``vertical``
    splits columns instead, near plane on the left.
    """
    d = np.full((k.height, k.width), far)
    if vertical:
        d[:, : k.width // 2 if edge is None else edge] = near
    else:
        d[: k.height // 2 if edge is None else edge, :] = near
    return DepthMap(d, np.ones_like(d, dtype=bool))


def smear_experiment(depth: DepthMap, k: CameraIntrinsics, kernel_size: int = 11):
    """Lift ``depth`` before and after box convolution.

    Returns ``(original_cloud, convolved_cloud, (mean, max))``.
    """
    original = depth_to_pointcloud(depth, k)
    smeared = depth_to_pointcloud(convolve_depth(depth, kernel_size), k)
    return original, smeared, smear_metric(original, smeared)
