import pytest
import torch

from mirrorlight.config import load_config
from mirrorlight.data import discover_pairs
from mirrorlight.toydata import make_toy_dataset

# small-model overrides shared by tests that need a real train loop
TINY_MODEL = [
    "model.depth=2",
    "model.base_channels=8",
    "model.cbam_reduction=2",
]


@pytest.fixture(scope="session")
def toy_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("toydata")
    return make_toy_dataset(root, n_train=6, n_val=3, size=48, seed=101)


@pytest.fixture(scope="session")
def toy_train_records(toy_root):
    return discover_pairs(toy_root, "train")


@pytest.fixture(scope="session")
def toy_val_records(toy_root):
    return discover_pairs(toy_root, "val")


@pytest.fixture
def tiny_config(toy_root, tmp_path):
    def make(*extra):
        overrides = TINY_MODEL + [
            "train.epochs=4",
            "train.batch_size=2",
            "train.crop_size=32",
            "train.seed=7",
            "train.checkpoint_every=0",
            f"data.root={toy_root}",
            f"output.dir={tmp_path / 'run'}",
            *extra,
        ]
        return load_config(None, overrides)

    return make


@pytest.fixture
def rng():
    g = torch.Generator()
    g.manual_seed(1234)
    return g
