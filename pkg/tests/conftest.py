import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from centrolab.binder.encoders import init_encoder_set  # noqa: E402
from centrolab.models.schemas import (  # noqa: E402
    BindConfig,
    DatasetSpec,
    EncoderSpec,
    EvalSpec,
    ExperimentConfig,
    PretrainConfig,
    ProbeConfig,
)
from centrolab.numkit.rng import make_rng  # noqa: E402
from centrolab.pipeline.runner import dataset_from_spec  # noqa: E402


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def tiny_spec():
    return DatasetSpec(n_modalities=3, d_x=6, d_z=4, n_classes=4, n_train=120, n_val=30, n_test=60)


@pytest.fixture
def tiny_dataset(tiny_spec):
    return dataset_from_spec(tiny_spec, seed=7)


@pytest.fixture
def tiny_encoders(tiny_dataset):
    return init_encoder_set(tiny_dataset.n_modalities, 6, [8], 4, make_rng(99))


@pytest.fixture
def tiny_config():
    return ExperimentConfig(
        name="tiny",
        dataset=DatasetSpec(n_modalities=3, d_x=6, d_z=4, n_classes=4, n_train=120, n_val=30, n_test=60),
        encoder=EncoderSpec(hidden=[8], embed_dim=4),
        backbones=["random", "pretrained"],
        methods=["none", "fabind:1", "fabind:3", "centrobind"],
        pretrain=PretrainConfig(epochs=1, batch_size=32),
        bind=BindConfig(epochs=2, batch_size=32),
        eval=EvalSpec(probe=ProbeConfig(hidden=8, epochs=3, batch_size=32), ks=[1, 5]),
        seeds=[11],
    )


def _central_differences(fn, array: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of scalar fn() with respect to `array`, perturbed in place."""
    grad = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        saved = array[idx]
        array[idx] = saved + step
        plus = fn()
        array[idx] = saved - step
        minus = fn()
        array[idx] = saved
        grad[idx] = (plus - minus) / (2 * step)
    return grad


@pytest.fixture
def finite_difference():
    return _central_differences
