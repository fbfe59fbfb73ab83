"""Dataset ingestion, preprocessing, and synthetic scenes."""

from .preprocess import (
    CROP,
    MEAN,
    RESIZED,
    STD,
    crop,
    crop_offsets,
    frame_to_pointset,
    jet_image,
    preprocess_image,
    resize_normalize,
)
from .sevenscenes import (
    Frame,
    FramePaths,
    SceneSplit,
    depth_from_millimeters,
    depth_to_millimeters,
    list_sequence,
    load_frame,
    load_frames,
    load_scene_split,
    read_depth_png,
    read_pose,
    read_rgb_png,
    write_depth_png,
    write_pose,
    write_rgb_png,
    write_sequence,
    write_split,
)
from .synthetic import SyntheticRoom, interpolated_params, synth_scene, synth_split

__all__ = [
    "CROP", "MEAN", "RESIZED", "STD", "crop", "crop_offsets", "frame_to_pointset", "jet_image",
    "preprocess_image", "resize_normalize",
    "Frame", "FramePaths", "SceneSplit", "depth_from_millimeters", "depth_to_millimeters",
    "list_sequence", "load_frame", "load_frames", "load_scene_split", "read_depth_png", "read_pose",
    "read_rgb_png", "write_depth_png", "write_pose", "write_rgb_png", "write_sequence", "write_split",
    "SyntheticRoom", "interpolated_params", "synth_scene", "synth_split",
]
