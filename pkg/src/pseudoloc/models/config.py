"""Model configuration dataclasses with TOML round-tripping."""

from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..errors import IngestionError, RejectedInputError

MODEL_KINDS = ("fusionloc", "pointnet-pose", "depth-posenet")


@dataclass
class SALayerConfig:
    n_centroids: int
    radius: float
    k: int
    widths: list


@dataclass
class PointStreamConfig:
    n_points: int = 1024
    sa_layers: list = field(default_factory=lambda: [
        SALayerConfig(256, 0.2, 32, [64, 64, 128]),
        SALayerConfig(64, 0.4, 64, [128, 128, 256]),
    ])
    global_widths: list = field(default_factory=lambda: [256, 512, 1024])
    head_widths: list = field(default_factory=lambda: [512, 256])
    feature_dim: int = 1024
    fps_seed: int = 0

    def validate(self):
        prev = self.n_points
        for i, sa in enumerate(self.sa_layers):
            if not 1 <= sa.n_centroids < prev:
                raise RejectedInputError(
                    f"sa_layers[{i}]: n_centroids must be in [1, {prev}), got {sa.n_centroids}"
                )
            if sa.radius <= 0 or sa.k < 1 or not sa.widths:
                raise RejectedInputError(f"sa_layers[{i}]: need radius > 0, k >= 1 and widths")
            prev = sa.n_centroids
        if not self.global_widths or self.global_widths[-1] < 1 or self.feature_dim < 1:
            raise RejectedInputError("global_widths and feature_dim must be non-empty and positive")


@dataclass
class RgbStreamConfig:
    image_size: int = 224
    encoder_channels: list = field(default_factory=lambda: [32, 64, 128, 256, 256])
    feature_dim: int = 1024
    attention: bool = True
    # when > 0 the conv encoder is replaced by precomputed feature vectors of this length
    precomputed_dim: int = 0

    def encoder_output_size(self):
        s = self.image_size
        for _ in self.encoder_channels:
            s = (s + 2 - 3) // 2 + 1
        return s

    def validate(self):
        if self.precomputed_dim < 0 or self.feature_dim < 1:
            raise RejectedInputError("feature dims must be positive")
        if not self.precomputed_dim and (not self.encoder_channels or self.encoder_output_size() < 1):
            raise RejectedInputError("encoder needs at least one block and a non-empty output map")


@dataclass
class ModelConfig:
    kind: str = "fusionloc"
    seed: int = 0
    point: PointStreamConfig = field(default_factory=PointStreamConfig)
    rgb: RgbStreamConfig = field(default_factory=RgbStreamConfig)
    head_widths: list = field(default_factory=lambda: [1024])
    beta_init: float = 0.0
    gamma_init: float = -3.0

    def validate(self):
        if self.kind not in MODEL_KINDS:
            raise RejectedInputError(f"unknown model kind {self.kind!r}; expected one of {MODEL_KINDS}")
        if self.kind in ("fusionloc", "pointnet-pose"):
            self.point.validate()
        if self.kind in ("fusionloc", "depth-posenet"):
            self.rgb.validate()
        if self.kind == "fusionloc" and self.point.feature_dim != self.rgb.feature_dim:
            raise RejectedInputError("fused streams must emit equal feature dims")
        return self

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        point = dict(d.pop("point", {}))
        if "sa_layers" in point:
            point["sa_layers"] = [SALayerConfig(**sa) for sa in point["sa_layers"]]
        rgb = dict(d.pop("rgb", {}))
        try:
            cfg = cls(point=PointStreamConfig(**point), rgb=RgbStreamConfig(**rgb), **d)
        except TypeError as exc:
            raise RejectedInputError(f"bad model config: {exc}") from None
        return cfg.validate()


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot encode {type(v).__name__} as TOML")


def dumps_toml(cfg: ModelConfig) -> str:
    d = cfg.to_dict()
    point, rgb = d.pop("point"), d.pop("rgb")
    sa_layers = point.pop("sa_layers")
    lines = [f"{k} = {_toml_value(v)}" for k, v in d.items()]
    lines += ["", "[point]"] + [f"{k} = {_toml_value(v)}" for k, v in point.items()]
    for sa in sa_layers:
        lines += ["", "[[point.sa_layers]]"] + [f"{k} = {_toml_value(v)}" for k, v in sa.items()]
    lines += ["", "[rgb]"] + [f"{k} = {_toml_value(v)}" for k, v in rgb.items()]
    return "\n".join(lines) + "\n"


def loads_toml(text: str) -> ModelConfig:
    return ModelConfig.from_dict(tomllib.loads(text))


def load_config(path) -> ModelConfig:
    path = Path(path)
    try:
        return loads_toml(path.read_text())
    except OSError as exc:
        raise IngestionError(path, f"cannot read model config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise IngestionError(path, f"invalid TOML: {exc}") from exc


def save_config(cfg: ModelConfig, path):
    Path(path).write_text(dumps_toml(cfg))
