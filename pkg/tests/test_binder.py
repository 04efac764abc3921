import numpy as np
import pytest

from centrolab.anchors.strategies import AnchorStrategy
from centrolab.binder.encoders import EncoderSet, init_encoder_set, load_encoder_set, save_encoder_set
from centrolab.binder.trainer import (
    TrainTrace,
    epochs_to_saturation,
    pretrain_backbone,
    train_adaptive,
    train_centrobind,
    train_fabind,
)
from centrolab.errors import ConfigError, NumericError, ShapeError
from centrolab.evalsuite.alignment import alignment_stats
from centrolab.evalsuite.probe import probe_accuracy
from centrolab.evalsuite.retrieval import retrieve_one_to_one, retrieve_two_to_one
from centrolab.models.schemas import BindConfig, DatasetSpec, PretrainConfig, ProbeConfig
from centrolab.numkit.mlp import mlp_forward
from centrolab.numkit.rng import make_rng
from centrolab.pipeline.runner import dataset_from_spec


@pytest.fixture
def bind_config():
    return BindConfig(epochs=3, batch_size=32, lr=5e-3)


# -----------------------------
# ENCODER SETS
# -----------------------------
def test_encoders_share_the_embedding_dimension(rng):
    a = init_encoder_set(1, 4, [5], 3, rng).encoders[0]
    b = init_encoder_set(1, 4, [5], 2, rng).encoders[0]
    with pytest.raises(ShapeError):
        EncoderSet([a, b])


def test_frozen_copy_leaves_the_original_trainable(tiny_encoders):
    frozen = tiny_encoders.frozen(0)
    assert frozen.trainable == [False, True, True]
    assert tiny_encoders.trainable == [True, True, True]


def test_encoder_set_files_round_trip(tiny_encoders, tmp_path):
    loaded = load_encoder_set(save_encoder_set(tiny_encoders.frozen(2), tmp_path / "enc"))
    assert loaded.checksums() == tiny_encoders.checksums()
    assert loaded.trainable == [True, True, False]


# -----------------------------
# PRETRAINING
# -----------------------------
def test_zero_epoch_pretraining_returns_the_initialization(tiny_dataset, tiny_encoders, rng):
    params = pretrain_backbone(tiny_dataset, 0, tiny_encoders.encoders[0], PretrainConfig(epochs=0), rng)
    assert params.checksum() == tiny_encoders.encoders[0].checksum()
    assert params is not tiny_encoders.encoders[0]


def test_pretraining_changes_only_the_copy(tiny_dataset, tiny_encoders, rng):
    before = tiny_encoders.encoders[1].checksum()
    params = pretrain_backbone(tiny_dataset, 1, tiny_encoders.encoders[1], PretrainConfig(epochs=1, batch_size=32), rng)
    assert params.checksum() != before
    assert tiny_encoders.encoders[1].checksum() == before


def test_pretrained_informative_modality_beats_chance():
    spec = DatasetSpec(
        n_modalities=1, d_x=8, d_z=4, n_classes=4, fractions=[0.0], noise_scale=0.3, n_train=400, n_val=0, n_test=200
    )
    dataset = dataset_from_spec(spec, seed=5)
    encoder = init_encoder_set(1, 8, [16], 8, make_rng(6)).encoders[0]
    params = pretrain_backbone(dataset, 0, encoder, PretrainConfig(epochs=5, batch_size=64, lr=5e-3), make_rng(7))

    train, test = dataset.indices("train"), dataset.indices("test")
    acc = probe_accuracy(
        mlp_forward(params, dataset.modalities[0][train]),
        dataset.labels[train],
        mlp_forward(params, dataset.modalities[0][test]),
        dataset.labels[test],
        ProbeConfig(hidden=16, epochs=40, lr=1e-2, batch_size=64),
        make_rng(8),
    )
    assert acc > 1 / 4 + 0.1


def test_pretrained_uninformative_modality_stays_at_chance():
    spec = DatasetSpec(
        n_modalities=1, d_x=8, d_z=4, n_classes=4, fractions=[1.0], noise_scale=0.3, n_train=400, n_val=0, n_test=600
    )
    dataset = dataset_from_spec(spec, seed=5)
    encoder = init_encoder_set(1, 8, [16], 8, make_rng(6)).encoders[0]
    params = pretrain_backbone(dataset, 0, encoder, PretrainConfig(epochs=5, batch_size=64, lr=5e-3), make_rng(7))

    train, test = dataset.indices("train"), dataset.indices("test")
    acc = probe_accuracy(
        mlp_forward(params, dataset.modalities[0][train]),
        dataset.labels[train],
        mlp_forward(params, dataset.modalities[0][test]),
        dataset.labels[test],
        ProbeConfig(hidden=16, epochs=40, lr=1e-2, batch_size=64),
        make_rng(8),
    )
    sigma = np.sqrt((1 / 4) * (3 / 4) / test.size)
    assert abs(acc - 1 / 4) <= 4 * sigma


# -----------------------------
# ADAPTIVE BINDING
# -----------------------------
def test_centrobind_trains_every_encoder(tiny_dataset, tiny_encoders, bind_config, rng):
    trained, trace = train_centrobind(tiny_dataset, tiny_encoders, bind_config, rng)

    assert trace.method == "centrobind"
    assert trace.losses.shape == (3, 3)
    assert np.all(np.isfinite(trace.losses))
    assert all(a != b for a, b in zip(trained.checksums(), tiny_encoders.checksums()))
    assert trace.checksums == trained.checksums()


def test_binding_does_not_touch_its_input(tiny_dataset, tiny_encoders, bind_config, rng):
    before = tiny_encoders.checksums()
    train_centrobind(tiny_dataset, tiny_encoders, bind_config, rng)
    assert tiny_encoders.checksums() == before


def test_all_frozen_encoders_are_a_no_op(tiny_dataset, tiny_encoders, rng):
    frozen = tiny_encoders.frozen(0, 1, 2)
    trained, trace = train_centrobind(tiny_dataset, frozen, BindConfig(epochs=1, batch_size=32), rng)
    assert trained.checksums() == tiny_encoders.checksums()
    assert np.all(np.isnan(trace.losses))


def test_replay_is_deterministic(tiny_dataset, tiny_encoders, bind_config):
    _, a = train_centrobind(tiny_dataset, tiny_encoders, bind_config, make_rng(4))
    _, b = train_centrobind(tiny_dataset, tiny_encoders, bind_config, make_rng(4))
    assert a.losses.tobytes() == b.losses.tobytes()
    assert a.checksums == b.checksums


def test_single_modality_binding_runs(tiny_dataset, rng):
    one = tiny_dataset.subset(np.arange(tiny_dataset.n_pairs))
    one.modalities = one.modalities[:1]
    one.projectors = one.projectors[:1]
    encoders = init_encoder_set(1, 6, [8], 4, rng)
    _, trace = train_centrobind(one, encoders, BindConfig(epochs=2, batch_size=32), rng)
    assert trace.losses.shape == (2, 1)
    assert np.all(np.isfinite(trace.losses))


def test_random_anchor_skips_the_drawn_modality_each_batch(tiny_dataset, tiny_encoders, rng):
    config = BindConfig(epochs=1, batch_size=200)
    strategy = AnchorStrategy.random_modality(freeze_anchor_encoder=True)
    trained, trace = train_adaptive(tiny_dataset, tiny_encoders, config, rng, strategy=strategy)
    # one batch per epoch: exactly the drawn modality keeps its weights
    unchanged = [a == b for a, b in zip(trained.checksums(), tiny_encoders.checksums())]
    assert sum(unchanged) == 1
    assert np.isnan(trace.losses[0, unchanged.index(True)])
    assert trace.method == "random"


def test_random_intra_updates_every_modality(tiny_dataset, tiny_encoders, rng):
    strategy = AnchorStrategy.random_modality(freeze_anchor_encoder=False)
    trained, trace = train_adaptive(tiny_dataset, tiny_encoders, BindConfig(epochs=1, batch_size=200), rng, strategy)
    assert all(a != b for a, b in zip(trained.checksums(), tiny_encoders.checksums()))
    assert trace.method == "random-intra"


@pytest.mark.parametrize("anchor", ["median", "wavg:0.2,0.5,1"])
def test_strategy_from_config_flag(anchor, tiny_dataset, tiny_encoders, rng):
    config = BindConfig(epochs=1, batch_size=32, anchor=anchor)
    _, trace = train_adaptive(tiny_dataset, tiny_encoders, config, rng)
    assert trace.method == anchor.split(":")[0]


def test_centrobind_loss_falls_and_alignment_rises():
    spec = DatasetSpec(n_modalities=3, d_x=8, d_z=4, n_classes=4, noise_scale=0.3, n_train=300, n_val=0, n_test=100)
    dataset = dataset_from_spec(spec, seed=9)
    encoders = init_encoder_set(3, 8, [16], 8, make_rng(10))
    before = alignment_stats(encoders, dataset, "test", make_rng(12))

    trained, trace = train_centrobind(dataset, encoders, BindConfig(epochs=15, batch_size=64, lr=5e-3), make_rng(11))
    after = alignment_stats(trained, dataset, "test", make_rng(12))

    total = trace.total()
    assert total[-1] < 0.95 * total[0]
    for key in before:
        if key.startswith("shared"):
            assert after[key] > before[key]
    assert np.mean([after[k] for k in after if k.startswith("intra")]) > 0.5


# -----------------------------
# FIXED-ANCHOR BINDING
# -----------------------------
def test_fabind_leaves_the_anchor_untouched(tiny_dataset, tiny_encoders, bind_config, rng):
    config = bind_config.model_copy(update={"anchor_modality": 3})
    trained, trace = train_fabind(tiny_dataset, tiny_encoders.frozen(2), config, rng)

    assert trained.checksums()[2] == tiny_encoders.checksums()[2]
    assert trained.checksums()[0] != tiny_encoders.checksums()[0]
    assert trained.checksums()[1] != tiny_encoders.checksums()[1]
    assert trace.method == "fabind:3"
    assert np.all(np.isnan(trace.losses[:, 2]))
    assert np.all(np.isfinite(trace.losses[:, :2]))


def test_fabind_requires_a_frozen_anchor(tiny_dataset, tiny_encoders, bind_config, rng):
    with pytest.raises(ConfigError, match="frozen"):
        train_fabind(tiny_dataset, tiny_encoders, bind_config.model_copy(update={"anchor_modality": 1}), rng)
    with pytest.raises(ConfigError):
        train_fabind(tiny_dataset, tiny_encoders.frozen(0), bind_config, rng)
    with pytest.raises(ConfigError, match="outside"):
        train_fabind(tiny_dataset, tiny_encoders.frozen(0), bind_config.model_copy(update={"anchor_modality": 4}), rng)


def test_one_way_fabind_runs(tiny_dataset, tiny_encoders, rng):
    config = BindConfig(epochs=1, batch_size=32, anchor_modality=1, symmetric=False)
    _, trace = train_fabind(tiny_dataset, tiny_encoders.frozen(0), config, rng)
    assert np.all(np.isfinite(trace.losses[:, 1:]))


def test_non_finite_loss_carries_the_partial_trace(tiny_dataset, tiny_encoders, rng):
    broken = tiny_encoders.copy()
    broken.encoders[1].layers[0].weight[0, 0] = np.nan
    with pytest.raises(NumericError) as info:
        train_centrobind(tiny_dataset, broken, BindConfig(epochs=2, batch_size=32), rng)
    assert isinstance(info.value.trace, TrainTrace)
    assert info.value.exit_code == 2


# -----------------------------
# TRACES
# -----------------------------
def test_trace_csv_round_trip(tmp_path):
    losses = np.array([[1.0, np.nan], [0.5, np.nan], [0.25, np.nan]])
    trace = TrainTrace("fabind:2", losses)
    loaded = TrainTrace.from_csv(trace.to_csv(tmp_path / "trace.csv"), "fabind:2", 2)
    np.testing.assert_array_equal(loaded.losses, losses)
    assert list(trace.to_frame().columns) == ["epoch", "modality", "loss"]


def test_epochs_to_saturation():
    trace = TrainTrace("centrobind", np.array([[4.0], [2.0], [1.2], [1.05], [1.0]]))
    # total drop 3.0, 95% of it is reached once the loss is <= 1.15
    assert epochs_to_saturation(trace) == 4
    assert epochs_to_saturation(TrainTrace("x", np.array([[1.0], [1.0]]))) == 1
    assert epochs_to_saturation(TrainTrace("x", np.zeros((0, 2)))) == 0


# -----------------------------
# BOUND EMBEDDINGS
# -----------------------------
def test_centrobind_raises_intra_similarity_on_noisy_views():
    spec = DatasetSpec(n_modalities=3, d_x=8, d_z=4, n_classes=4, noise_scale=2.0, n_train=400, n_val=0, n_test=200)
    dataset = dataset_from_spec(spec, seed=13)
    encoders = init_encoder_set(3, 8, [16], 8, make_rng(14))
    before = alignment_stats(encoders, dataset, "test", make_rng(16))

    trained, _ = train_centrobind(dataset, encoders, BindConfig(epochs=20, batch_size=64, lr=5e-3), make_rng(15))
    after = alignment_stats(trained, dataset, "test", make_rng(16))

    intra = [k for k in before if k.startswith("intra")]
    assert np.mean([after[k] for k in intra]) > np.mean([before[k] for k in intra])


def test_fabind_against_a_noise_anchor_retrieves_at_chance():
    # X1 is pure noise, so its frozen embeddings carry nothing about the pair
    spec = DatasetSpec(
        n_modalities=2, d_x=8, d_z=4, n_classes=4, fractions=[1.0, 0.0], noise_scale=0.3,
        n_train=300, n_val=0, n_test=200,
    )
    dataset = dataset_from_spec(spec, seed=17)
    encoders = init_encoder_set(2, 8, [16], 8, make_rng(18)).frozen(0)
    config = BindConfig(epochs=10, batch_size=64, lr=5e-3, anchor_modality=1)
    trained, _ = train_fabind(dataset, encoders, config, make_rng(19))

    test = dataset.indices("test")
    query = trained.embed(1, dataset.modalities[1][test])
    gallery = trained.embed(0, dataset.modalities[0][test])
    n = test.size
    assert retrieve_one_to_one(query, gallery, 1) <= 1 / n + 3 * np.sqrt((1 / n) * (1 - 1 / n) / n)


def test_two_to_one_with_a_noise_query_lies_between_its_parts():
    spec = DatasetSpec(
        n_modalities=3, d_x=8, d_z=4, n_classes=4, fractions=[1.0, 0.0, 0.0], noise_scale=0.3,
        n_train=400, n_val=0, n_test=100,
    )
    inside = 0
    for seed in (31, 32, 33):
        dataset = dataset_from_spec(spec, seed=seed)
        encoders = init_encoder_set(3, 8, [16], 8, make_rng(seed + 100))
        config = BindConfig(epochs=20, batch_size=64, lr=5e-3)
        trained, _ = train_centrobind(dataset, encoders, config, make_rng(seed + 200))

        test = dataset.indices("test")
        noise, gallery, informative = (trained.embed(i, dataset.modalities[i][test]) for i in range(3))
        singles = [retrieve_one_to_one(noise, gallery, 5), retrieve_one_to_one(informative, gallery, 5)]
        fused = retrieve_two_to_one(noise, informative, gallery, 5)
        inside += min(singles) <= fused <= max(singles)
    assert inside >= 2
