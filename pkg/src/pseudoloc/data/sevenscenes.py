"""Reading and writing scenes in the 7 Scenes on-disk layout.

A scene directory holds ``seq-XX/`` folders with, per frame::

    frame-000000.color.png   8-bit RGB
    frame-000000.depth.png   16-bit grayscale, millimeters; 0 and 65535 = no reading
    frame-000000.pose.txt    4x4 camera-to-world matrix, row-major, whitespace separated

``TrainSplit.txt`` / ``TestSplit.txt`` list sequences as ``sequence1`` lines.
"""

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import IngestionError, RejectedInputError
from ..geometry import CameraIntrinsics, DepthMap
from ..pose import Pose

INVALID_DEPTH_CODES = (0, 65535)
_FRAME_RE = re.compile(r"^frame-(\d{6})\.color\.png$")


@dataclass
class Frame:
    rgb: np.ndarray  # (H, W, 3) uint8
    depth: DepthMap
    pose: Pose  # camera-to-world
    scene: str = ""
    sequence: str = ""
    index: int = 0

    def __post_init__(self):
        if self.rgb.shape[:2] != self.depth.depth.shape:
            raise RejectedInputError(
                f"rgb {self.rgb.shape[:2]} and depth {self.depth.depth.shape} resolutions differ"
            )


@dataclass
class FramePaths:
    rgb: Path
    depth: Path
    pose: Path
    scene: str
    sequence: str
    index: int


@dataclass
class SceneSplit:
    train: list
    test: list

    def __post_init__(self):
        overlap = {(f.sequence, f.index) for f in self.train} & {(f.sequence, f.index) for f in self.test}
        if overlap:
            raise RejectedInputError(f"train and test splits share {len(overlap)} frames")


def _png_header(path):
    with open(path, "rb") as f:
        head = f.read(33)
    if len(head) < 33 or head[:8] != b"\x89PNG\r\n\x1a\n" or head[12:16] != b"IHDR":
        raise IngestionError(path, "not a PNG file")
    width, height, bit_depth, color_type = struct.unpack(">IIBB", head[16:26])
    return width, height, bit_depth, color_type


def read_depth_png(path):
    """Raw uint16 millimeter image from a 16-bit grayscale PNG."""
    path = Path(path)
    try:
        _, _, bit_depth, color_type = _png_header(path)
    except OSError as exc:
        raise IngestionError(path, f"cannot read depth image: {exc}") from exc
    if bit_depth != 16 or color_type != 0:
        raise IngestionError(path, f"depth PNG must be 16-bit grayscale, got bit depth {bit_depth}, color type {color_type}")
    try:
        with Image.open(path) as im:
            raw = np.array(im)
    except OSError as exc:
        raise IngestionError(path, f"malformed depth PNG: {exc}") from exc
    return raw.astype(np.uint16)


def depth_from_millimeters(raw):
    raw = np.asarray(raw)
    valid = ~np.isin(raw, INVALID_DEPTH_CODES)
    return DepthMap(np.where(valid, raw.astype(np.float64) / 1000.0, 0.0), valid)


def depth_to_millimeters(depth: DepthMap):
    """Round valid depths to millimeters; invalid pixels become 65535."""
    mm = np.rint(depth.depth * 1000.0)
    if np.any(mm[depth.valid] >= 65535) or np.any(mm[depth.valid] < 1):
        raise RejectedInputError("depth outside the encodable (0, 65.535) m range")
    return np.where(depth.valid, mm, 65535).astype(np.uint16)


def write_depth_png(path, depth: DepthMap):
    Image.fromarray(depth_to_millimeters(depth)).save(path)


def read_rgb_png(path):
    path = Path(path)
    try:
        with Image.open(path) as im:
            return np.array(im.convert("RGB"))
    except OSError as exc:
        raise IngestionError(path, f"cannot read color image: {exc}") from exc


def write_rgb_png(path, rgb):
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path)


def read_pose(path) -> Pose:
    path = Path(path)
    try:
        values = np.array(path.read_text().split(), dtype=np.float64)
    except OSError as exc:
        raise IngestionError(path, f"cannot read pose: {exc}") from exc
    except ValueError as exc:
        raise IngestionError(path, f"pose file has non-numeric entries: {exc}") from exc
    if values.size != 16:
        raise IngestionError(path, f"pose file must hold 16 numbers, found {values.size}")
    m = values.reshape(4, 4)
    try:
        return Pose.from_matrix(m)
    except RejectedInputError as exc:
        raise IngestionError(path, str(exc)) from exc


def write_pose(path, pose: Pose):
    m = pose.matrix()
    Path(path).write_text("\n".join(" ".join(f"{x:.17g}" for x in row) for row in m) + "\n")


def load_frame(rgb_path, depth_path, pose_path, k: CameraIntrinsics, scene="", sequence="", index=0) -> Frame:
    depth = depth_from_millimeters(read_depth_png(depth_path))
    if depth.depth.shape != (k.height, k.width):
        raise IngestionError(depth_path, f"depth is {depth.width}x{depth.height}, intrinsics expect {k.width}x{k.height}")
    rgb = read_rgb_png(rgb_path)
    if rgb.shape[:2] != depth.depth.shape:
        raise IngestionError(rgb_path, f"color resolution {rgb.shape[1]}x{rgb.shape[0]} differs from depth")
    return Frame(rgb, depth, read_pose(pose_path), scene, sequence, index)


def frame_stem(index):
    return f"frame-{index:06d}"


def list_sequence(seq_dir, scene=None):
    """FramePaths for every complete frame in a sequence folder, by index."""
    seq_dir = Path(seq_dir)
    if not seq_dir.is_dir():
        raise IngestionError(seq_dir, "sequence directory does not exist")
    scene = seq_dir.parent.name if scene is None else scene
    out = []
    for p in sorted(seq_dir.iterdir()):
        m = _FRAME_RE.match(p.name)
        if not m:
            continue
        idx = int(m.group(1))
        stem = seq_dir / frame_stem(idx)
        paths = FramePaths(p, Path(f"{stem}.depth.png"), Path(f"{stem}.pose.txt"), scene, seq_dir.name, idx)
        for f in (paths.depth, paths.pose):
            if not f.exists():
                raise IngestionError(f, "missing companion file for frame")
        out.append(paths)
    if not out:
        raise IngestionError(seq_dir, "no frames found")
    return out


def _read_split(path):
    names = []
    for line in Path(path).read_text().split():
        m = re.fullmatch(r"sequence(\d+)", line.strip())
        if not m:
            raise IngestionError(path, f"unrecognized split entry {line!r}")
        names.append(f"seq-{int(m.group(1)):02d}")
    return names


def load_scene_split(scene_dir) -> SceneSplit:
    """FramePaths for the train and test sequences named by the split files."""
    scene_dir = Path(scene_dir)
    parts = {}
    for key, fname in (("train", "TrainSplit.txt"), ("test", "TestSplit.txt")):
        path = scene_dir / fname
        if not path.exists():
            raise IngestionError(path, "split list not found")
        frames = []
        for seq in _read_split(path):
            frames += list_sequence(scene_dir / seq, scene=scene_dir.name)
        parts[key] = frames
    return SceneSplit(parts["train"], parts["test"])


def load_frames(paths, k: CameraIntrinsics):
    return [load_frame(p.rgb, p.depth, p.pose, k, p.scene, p.sequence, p.index) for p in paths]


def write_sequence(frames, seq_dir):
    """Write frames in the on-disk layout; the frame's ``index`` names the files."""
    seq_dir = Path(seq_dir)
    seq_dir.mkdir(parents=True, exist_ok=True)
    for fr in frames:
        stem = seq_dir / frame_stem(fr.index)
        write_rgb_png(f"{stem}.color.png", fr.rgb)
        write_depth_png(f"{stem}.depth.png", fr.depth)
        write_pose(f"{stem}.pose.txt", fr.pose)
    return seq_dir


def write_split(scene_dir, train_seqs, test_seqs):
    scene_dir = Path(scene_dir)

    def fmt(seqs):
        return "".join(f"sequence{int(s.split('-')[1])}\n" for s in seqs)

    (scene_dir / "TrainSplit.txt").write_text(fmt(train_seqs))
    (scene_dir / "TestSplit.txt").write_text(fmt(test_seqs))
