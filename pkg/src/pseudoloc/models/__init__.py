"""Pose regression networks and their configuration."""

from .config import (
    MODEL_KINDS,
    ModelConfig,
    PointStreamConfig,
    RgbStreamConfig,
    SALayerConfig,
    dumps_toml,
    load_config,
    loads_toml,
    save_config,
)
from .networks import (
    DepthPoseNet,
    FusionLoc,
    PointNetPose,
    PointStream,
    PoseRegressor,
    RgbStream,
    SelfAttention,
    build_model,
    canonical_order,
    default_config,
)

__all__ = [
    "MODEL_KINDS", "ModelConfig", "PointStreamConfig", "RgbStreamConfig", "SALayerConfig",
    "dumps_toml", "load_config", "loads_toml", "save_config",
    "DepthPoseNet", "FusionLoc", "PointNetPose", "PointStream", "PoseRegressor", "RgbStream",
    "SelfAttention", "build_model", "canonical_order", "default_config",
]
