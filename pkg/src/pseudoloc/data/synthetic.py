"""Procedural rooms ray-cast into RGB-D frames with exact poses.

World frame: x east, y down, z north; the floor is the plane y = 0 and
the ceiling y = -height. A camera with identity rotation looks along +z
with image rows running along +y, matching the camera-frame convention.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import RejectedInputError
from ..geometry import SEVEN_SCENES_INTRINSICS, CameraIntrinsics, DepthMap
from ..pose import Pose, rotmat_to_quat
from .sevenscenes import Frame

CAMERA_HEIGHT = 1.3
_TINY = 1e-18


@dataclass
class Box:
    lo: np.ndarray
    hi: np.ndarray


def _rot_x(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def _rot_y(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1.0, 0], [-s, 0, c]])


def _rot_z(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


class SyntheticRoom:
    """A closed room with 2-4 floor-standing boxes and a looping camera path."""

    def __init__(self, seed):
        rng = np.random.default_rng(seed)
        self.seed = seed
        w, h, d = rng.uniform(4.5, 6.0), rng.uniform(2.6, 3.0), rng.uniform(4.5, 6.0)
        self.room = Box(np.array([0.0, -h, 0.0]), np.array([w, 0.0, d]))
        self.center = np.array([w / 2, -CAMERA_HEIGHT, d / 2])
        self.radii = rng.uniform(0.5, 0.9, size=2)
        self.phases = rng.uniform(0, 2 * np.pi, size=4)
        # headings stay within ~65 degrees of +z so logarithms of orientations never wrap
        self.yaw0 = rng.uniform(-0.6, 0.6)

        keep_out_lo = self.center[[0, 2]] - self.radii - 0.6
        keep_out_hi = self.center[[0, 2]] + self.radii + 0.6
        self.boxes = []
        n_boxes = int(rng.integers(2, 5))
        while len(self.boxes) < n_boxes:
            size = np.array([rng.uniform(0.4, 1.2), rng.uniform(0.5, 1.6), rng.uniform(0.4, 1.2)])
            x = rng.uniform(0.1, w - 0.1 - size[0])
            z = rng.uniform(0.1, d - 0.1 - size[2])
            lo = np.array([x, -size[1], z])
            hi = np.array([x + size[0], 0.0, z + size[2]])
            foot_lo, foot_hi = lo[[0, 2]], hi[[0, 2]]
            if np.all(foot_lo < keep_out_hi) and np.all(foot_hi > keep_out_lo):
                continue
            if any(np.all(lo < b.hi) and np.all(hi > b.lo) for b in self.boxes):
                continue
            self.boxes.append(Box(lo, hi))

        n_surfaces = 6 + len(self.boxes)
        self.colors = rng.uniform(60, 230, size=(n_surfaces, 3))
        self.patterns = rng.uniform(0.8, 2.0, size=(n_surfaces, 3)) * rng.choice([-1, 1], size=(n_surfaces, 3))

    def pose_at(self, s) -> Pose:
        """Camera-to-world pose at trajectory parameter ``s`` (period 1)."""
        p = self.phases
        a = 2 * np.pi * s
        t = self.center + np.array([
            self.radii[0] * np.cos(a),
            0.1 * np.sin(2 * a + p[0]),
            self.radii[1] * np.sin(a),
        ])
        yaw = self.yaw0 + 0.5 * np.sin(a + p[1])
        pitch = 0.12 + 0.08 * np.sin(2 * a + p[2])
        roll = 0.04 * np.sin(3 * a + p[3])
        r = _rot_y(yaw) @ _rot_x(-pitch) @ _rot_z(roll)
        return Pose(t, rotmat_to_quat(r))

    def surfaces(self):
        """``(axis, value, lo, hi)`` for every face, room walls first."""
        out = []
        for box in [self.room] + self.boxes:
            for axis in range(3):
                for value in (box.lo[axis], box.hi[axis]):
                    out.append((axis, value, box.lo, box.hi))
        return out

    def cast(self, origin, dirs):
        """Ray parameter and surface id of the first hit for rays ``origin + t * dirs``."""
        d = np.where(dirs == 0, _TINY, dirs)
        lo, hi = self.room.lo, self.room.hi
        # inside the room every ray leaves through exactly one face
        t_axes = np.where(d > 0, (hi - origin) / d, (lo - origin) / d)
        axis = np.argmin(t_axes, axis=-1)
        t = np.take_along_axis(t_axes, axis[..., None], axis=-1)[..., 0]
        positive = np.take_along_axis(d, axis[..., None], axis=-1)[..., 0] > 0
        sid = 2 * axis + positive
        for i, box in enumerate(self.boxes):
            t1 = (box.lo - origin) / d
            t2 = (box.hi - origin) / d
            t_near = np.minimum(t1, t2).max(axis=-1)
            t_far = np.maximum(t1, t2).min(axis=-1)
            hit = (t_near <= t_far) & (t_near > 0) & (t_near < t)
            t = np.where(hit, t_near, t)
            sid = np.where(hit, 6 + i, sid)
        return t, sid

    def render(self, s, k: CameraIntrinsics = SEVEN_SCENES_INTRINSICS):
        """``(rgb uint8 (H, W, 3), DepthMap, Pose)`` at trajectory parameter ``s``."""
        pose = self.pose_at(s)
        r = pose.matrix()[:3, :3]
        v, u = np.mgrid[0 : k.height, 0 : k.width].astype(np.float64)
        rays = np.stack([(u - k.c_u) / k.f_u, (v - k.c_v) / k.f_v, np.ones_like(u)], axis=-1)
        dirs = rays @ r.T
        # rays have unit camera-frame z, so the ray parameter is the depth
        depth, sid = self.cast(pose.t, dirs)
        world = pose.t + depth[..., None] * dirs
        pattern = 0.5 + 0.5 * np.sin(2 * np.pi * np.einsum("hwc,hwc->hw", world, self.patterns[sid]))
        shade = 1.0 / (1.0 + 0.15 * depth)
        rgb = self.colors[sid] * (0.6 + 0.4 * pattern)[..., None] * (0.7 + 0.3 * shade)[..., None]
        rgb = np.clip(np.rint(rgb), 0, 255).astype(np.uint8)
        return rgb, DepthMap(depth, np.ones_like(depth, dtype=bool)), pose

    def distance_to_geometry(self, points):
        """Distance from world points to the nearest face they lie within."""
        points = np.asarray(points, dtype=np.float64)
        best = np.full(points.shape[0], np.inf)
        for axis, value, lo, hi in self.surfaces():
            others = [a for a in range(3) if a != axis]
            inside = np.all((points[:, others] >= lo[others] - 1e-9) & (points[:, others] <= hi[others] + 1e-9), axis=1)
            dist = np.where(inside, np.abs(points[:, axis] - value), np.inf)
            best = np.minimum(best, dist)
        return best

    def frames(self, params, k: CameraIntrinsics = SEVEN_SCENES_INTRINSICS, sequence="seq-01", first_index=0):
        out = []
        for i, s in enumerate(params):
            rgb, depth, pose = self.render(s, k)
            out.append(Frame(rgb, depth, pose, f"synthetic-{self.seed}", sequence, first_index + i))
        return out


def synth_scene(seed, n_frames, k: CameraIntrinsics = SEVEN_SCENES_INTRINSICS):
    """``n_frames`` frames evenly spaced around the room's camera loop."""
    if n_frames < 1:
        raise RejectedInputError(f"n_frames must be >= 1, got {n_frames}")
    return SyntheticRoom(seed).frames([i / n_frames for i in range(n_frames)], k)


def interpolated_params(n_train, n_test):
    """Trajectory parameters halfway between training frames, spread over the loop."""
    picks = np.unique(np.round(np.linspace(0, n_train - 1, n_test)).astype(int))
    return [(i + 0.5) / n_train for i in picks]


def synth_split(seed, n_train, n_test, k: CameraIntrinsics = SEVEN_SCENES_INTRINSICS):
    """Training frames on the loop plus held-out frames between them (sequence ``seq-02``)."""
    if n_train < 1 or n_test < 0:
        raise RejectedInputError(f"need n_train >= 1 and n_test >= 0, got {n_train}, {n_test}")
    room = SyntheticRoom(seed)
    train = room.frames([i / n_train for i in range(n_train)], k, "seq-01")
    test = room.frames(interpolated_params(n_train, n_test), k, "seq-02")
    return train, test
