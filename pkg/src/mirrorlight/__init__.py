"""Low-light image enhancement via a mirror-distilled teacher-student autoencoder."""

from .config import RunConfig, load_config
from .losses import CONFIG_TAGS, LossBreakdown, SsimParams, ssim_index, total_loss
from .luminance import emphasis_weights, luminance_map, weights_from_image
from .mirror import iaml_level, iaml_total, standardize_features
from .training import TrainState, enhance, init_state, load_checkpoint, train
from .unet import AutoEncoder, BackboneConfig, Decoder, Encoder

__version__ = "0.1.0"

__all__ = [
    "AutoEncoder",
    "BackboneConfig",
    "CONFIG_TAGS",
    "Decoder",
    "Encoder",
    "LossBreakdown",
    "RunConfig",
    "SsimParams",
    "TrainState",
    "emphasis_weights",
    "enhance",
    "iaml_level",
    "iaml_total",
    "init_state",
    "load_checkpoint",
    "load_config",
    "luminance_map",
    "ssim_index",
    "standardize_features",
    "total_loss",
    "train",
    "weights_from_image",
    "__version__",
]
