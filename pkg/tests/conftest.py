import json
from pathlib import Path

import numpy as np
import pytest

from pseudoloc.geometry import CameraIntrinsics
from pseudoloc.models import ModelConfig, PointStreamConfig, RgbStreamConfig, SALayerConfig

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def mini_scene():
    return DATA / "mini_scene"


@pytest.fixture
def mini_expected():
    exp = json.loads((DATA / "mini_scene_expected.json").read_text())
    exp["k"] = CameraIntrinsics(*exp["intrinsics"])
    return exp


def tiny_config(kind="fusionloc", seed=0, attention=True):
    """A scaled-down model config that keeps every architectural piece."""
    point = PointStreamConfig(
        n_points=64,
        sa_layers=[SALayerConfig(16, 0.5, 8, [8, 8]), SALayerConfig(8, 1.0, 8, [8, 16])],
        global_widths=[16, 32],
        head_widths=[16],
        feature_dim=12,
    )
    rgb = RgbStreamConfig(image_size=16, encoder_channels=[4, 6], feature_dim=12, attention=attention)
    return ModelConfig(kind=kind, seed=seed, point=point, rgb=rgb, head_widths=[10]).validate()
