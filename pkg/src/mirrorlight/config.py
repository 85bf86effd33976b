"""Run configuration: nested dataclasses + YAML/CLI loading.

A run is fully described by one RunConfig. Values resolve in order:
built-in defaults < YAML config file < --set key=value overrides.
The merged config is echoed into the run directory so any run can be
reproduced from its own artifacts.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from .errors import RangeError, UnknownKey
from .losses import CONFIG_TAGS

# "lambda" is a Python keyword, so the serialized key and the attribute differ.
_KEY_TO_ATTR = {"lambda": "lambda_"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}

ENV_DATA_ROOT = "MIRRORLIGHT_DATA_ROOT"


@dataclass
class ModelConfig:
    depth: int = 4
    base_channels: int = 32
    cbam_reduction: int = 16
    cbam_spatial_kernel: int = 7


@dataclass
class IamlConfig:
    beta: float = 0.6
    eps: float = 1e-6
    levels: list[int] | None = None  # None = distil every decoder level


@dataclass
class SsimConfig:
    window: int = 11
    sigma: float = 1.5


@dataclass
class LossConfig:
    config_tag: str = "mse_ssim_iaml"
    lambda_: float = 0.8
    iaml: IamlConfig = field(default_factory=IamlConfig)
    ssim: SsimConfig = field(default_factory=SsimConfig)


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 8
    crop_size: int = 256
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    ema_momentum: float = 0.999
    seed: int = 0
    augment: bool = True
    checkpoint_every: int = 50  # epochs between numbered checkpoints
    val_every: int = 0  # epochs between val-split evals, 0 = never


@dataclass
class DataConfig:
    root: str = ""
    train_split: str = "train"
    val_split: str = "val"

    def __post_init__(self):
        if not self.root:
            self.root = os.environ.get(ENV_DATA_ROOT, "data")


@dataclass
class EvalConfig:
    split: str = "val"
    lpips_model: str | None = None


@dataclass
class OutputConfig:
    dir: str = "runs/default"


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    data: DataConfig = field(default_factory=DataConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _check_positive(name: str, value, strict=True):
    bad = value <= 0 if strict else value < 0
    if bad:
        raise RangeError(f"{name} must be {'>' if strict else '>='} 0, got {value}")


def validate_config(cfg: RunConfig) -> RunConfig:
    m, t, l = cfg.model, cfg.train, cfg.loss
    _check_positive("model.depth", m.depth)
    _check_positive("model.base_channels", m.base_channels)
    _check_positive("model.cbam_reduction", m.cbam_reduction)
    if m.cbam_spatial_kernel % 2 != 1:
        raise RangeError(
            f"model.cbam_spatial_kernel must be odd, got {m.cbam_spatial_kernel}"
        )
    _check_positive("train.epochs", t.epochs)
    _check_positive("train.batch_size", t.batch_size)
    _check_positive("train.crop_size", t.crop_size, strict=False)
    _check_positive("train.lr", t.lr)
    if not 0.0 <= t.ema_momentum < 1.0:
        raise RangeError(
            f"train.ema_momentum must be in [0, 1), got {t.ema_momentum}"
        )
    for name in ("beta1", "beta2"):
        v = getattr(t, name)
        if not 0.0 <= v < 1.0:
            raise RangeError(f"train.{name} must be in [0, 1), got {v}")
    if l.config_tag not in CONFIG_TAGS:
        raise RangeError(
            f"loss.config_tag must be one of {sorted(CONFIG_TAGS)}, "
            f"got {l.config_tag!r}"
        )
    _check_positive("loss.lambda", l.lambda_, strict=False)
    _check_positive("loss.iaml.beta", l.iaml.beta, strict=False)
    _check_positive("loss.iaml.eps", l.iaml.eps)
    _check_positive("loss.ssim.window", l.ssim.window)
    if l.ssim.window % 2 != 1:
        raise RangeError(f"loss.ssim.window must be odd, got {l.ssim.window}")
    _check_positive("loss.ssim.sigma", l.ssim.sigma)
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    def rename(d):
        if isinstance(d, dict):
            return {_ATTR_TO_KEY.get(k, k): rename(v) for k, v in d.items()}
        if isinstance(d, list):
            return [rename(v) for v in d]
        return d

    return rename(asdict(cfg))


def _coerce(value: Any, target_type: Any, key: str) -> Any:
    """Best-effort scalar coercion with a clear error naming the key."""
    if value is None:
        return None
    origin = getattr(target_type, "__origin__", None)
    if origin is not None or isinstance(value, (list, dict)):
        return value  # lists / optionals: trust YAML typing
    if target_type is bool:
        if isinstance(value, bool):
            return value
        raise TypeError(f"{key}: expected bool, got {value!r}")
    if target_type is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"{key}: expected int, got {value!r}")
        return value
    if target_type is float:
        if isinstance(value, str):
            # YAML treats bare scientific notation like 1e-3 as a string
            try:
                return float(value)
            except ValueError:
                raise TypeError(f"{key}: expected float, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"{key}: expected float, got {value!r}")
        return float(value)
    if target_type is str:
        if not isinstance(value, str):
            raise TypeError(f"{key}: expected str, got {value!r}")
        return value
    return value


def _apply_dict(obj: Any, data: dict, prefix: str = "") -> None:
    field_map = {f.name: f for f in fields(obj)}
    for raw_key, value in data.items():
        attr = _KEY_TO_ATTR.get(raw_key, raw_key)
        full = f"{prefix}{raw_key}"
        if attr not in field_map:
            raise UnknownKey(f"unknown config key {full!r}")
        current = getattr(obj, attr)
        if is_dataclass(current):
            if not isinstance(value, dict):
                raise TypeError(f"{full}: expected a mapping, got {value!r}")
            _apply_dict(current, value, prefix=full + ".")
        else:
            anno = field_map[attr].type
            target = _annotation_to_type(anno)
            setattr(obj, attr, _coerce(value, target, full))


def _annotation_to_type(anno) -> Any:
    if isinstance(anno, str):
        # from __future__ annotations stores strings; match the base name
        base = anno.split("|")[0].strip()
        return {"int": int, "float": float, "str": str, "bool": bool}.get(base, object)
    return anno


def _apply_override(cfg: RunConfig, assignment: str) -> None:
    if "=" not in assignment:
        raise UnknownKey(f"override must look like key=value, got {assignment!r}")
    dotted, raw_value = assignment.split("=", 1)
    value = yaml.safe_load(raw_value)
    node: dict = {}
    leaf = node
    parts = dotted.split(".")
    for part in parts[:-1]:
        leaf[part] = {}
        leaf = leaf[part]
    leaf[parts[-1]] = value
    _apply_dict(cfg, node)


def load_config(
    config_file: str | Path | None = None, overrides: list[str] | None = None
) -> RunConfig:
    """Build a validated RunConfig from defaults, a YAML file, and overrides."""
    cfg = RunConfig()
    if config_file is not None:
        with open(config_file) as fh:
            data = yaml.safe_load(fh)
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise UnknownKey(f"config file {config_file} must hold a mapping")
        _apply_dict(cfg, data)
    for assignment in overrides or []:
        _apply_override(cfg, assignment)
    return validate_config(cfg)


def config_from_dict(data: dict) -> RunConfig:
    cfg = RunConfig()
    _apply_dict(cfg, data)
    return validate_config(cfg)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
