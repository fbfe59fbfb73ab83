"""Image and point-set preprocessing for the network inputs."""

import numpy as np
from PIL import Image

from ..errors import DegenerateInputError, RejectedInputError
from ..geometry import CameraIntrinsics, depth_to_pointcloud, jet_colormap
from ..pointcloud import random_sample

NATIVE_SIZE = (640, 480)
RESIZED = (341, 256)  # shorter side to 256: 640 * 256 / 480 = 341.33, floored
CROP = 224
# large-image-corpus statistics; kept so precomputed and scratch features see the same inputs
MEAN = np.array([0.485, 0.456, 0.406])
STD = np.array([0.229, 0.224, 0.225])


def crop_offsets(train_mode, seed):
    """Top-left ``(x, y)`` of the 224 crop inside the 341x256 resized image."""
    w, h = RESIZED
    if train_mode:
        rng = np.random.default_rng(seed)
        return int(rng.integers(0, w - CROP + 1)), int(rng.integers(0, h - CROP + 1))
    return (w - CROP) // 2, (h - CROP) // 2


def resize_normalize(rgb):
    """640x480 uint8 RGB -> bilinear 341x256, scaled to [0, 1], channel-normalized, (3, 256, 341)."""
    rgb = np.asarray(rgb)
    if rgb.shape != (NATIVE_SIZE[1], NATIVE_SIZE[0], 3):
        raise RejectedInputError(f"expected a 480x640x3 image, got {rgb.shape}")
    small = np.asarray(Image.fromarray(rgb.astype(np.uint8)).resize(RESIZED, Image.BILINEAR), dtype=np.float64)
    return ((small / 255.0 - MEAN) / STD).transpose(2, 0, 1)


def crop(resized, train_mode, seed):
    x, y = crop_offsets(train_mode, seed)
    return np.ascontiguousarray(resized[:, y : y + CROP, x : x + CROP])


def preprocess_image(rgb, train_mode=False, seed=0):
    """Network-ready (3, 224, 224) float64 image: random crop when training, center crop otherwise."""
    return crop(resize_normalize(rgb), train_mode, seed)


def jet_image(depth):
    """Jet-colored depth as a 640x480 RGB image, ready for ``preprocess_image``."""
    return jet_colormap(depth)


def frame_to_pointset(frame, k: CameraIntrinsics, n=1024, seed=0):
    """Lift the frame's depth and randomly sample ``n`` points."""
    cloud = depth_to_pointcloud(frame.depth, k)
    if cloud.shape[0] == 0:
        raise DegenerateInputError("frame has no valid depth pixels")
    return random_sample(cloud, n, seed)
