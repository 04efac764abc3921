import numpy as np
import pytest

from centrolab.anchors.strategies import AnchorKind, AnchorStrategy, build_anchors, parse_anchor_flag
from centrolab.errors import ConfigError, DataError, ShapeError


def rows(*vectors):
    return [np.array([v], dtype=np.float64) for v in vectors]


def test_identical_embeddings_give_that_embedding(rng):
    batch = build_anchors(AnchorStrategy.centroid(), rows((1, 0), (1, 0)), rng)
    np.testing.assert_array_equal(batch.anchors, [[1.0, 0.0]])


def test_centroid_is_the_arithmetic_mean(rng):
    batch = build_anchors(AnchorStrategy.centroid(), rows((1, 0), (0, 1)), rng)
    np.testing.assert_allclose(batch.anchors, [[0.5, 0.5]])
    assert batch.contributors.all()


def test_centroid_over_available_modalities_only(rng):
    mask = np.array([[True, False, True]])
    batch = build_anchors(AnchorStrategy.centroid(), rows((1, 0), (7, 7), (0, 1)), rng, availability=mask)
    np.testing.assert_allclose(batch.anchors, [[0.5, 0.5]])
    np.testing.assert_array_equal(batch.contributors, mask)


def test_coordinate_wise_median(rng):
    batch = build_anchors(AnchorStrategy.median(), rows((1, 0), (0, 1), (0.5, 0.5)), rng)
    np.testing.assert_allclose(batch.anchors, [[0.5, 0.5]])


def test_median_of_two_equals_centroid(rng):
    emb = [rng.standard_normal((5, 3)) for _ in range(2)]
    median = build_anchors(AnchorStrategy.median(), emb, rng).anchors
    centroid = build_anchors(AnchorStrategy.centroid(), emb, rng).anchors
    np.testing.assert_allclose(median, centroid, atol=1e-14)


def test_equal_weights_equal_centroid_exactly(rng):
    emb = [rng.standard_normal((6, 4)) for _ in range(3)]
    weighted = build_anchors(AnchorStrategy.weighted([1, 1, 1]), emb, rng).anchors
    centroid = build_anchors(AnchorStrategy.centroid(), emb, rng).anchors
    np.testing.assert_array_equal(weighted, centroid)
    scaled = build_anchors(AnchorStrategy.weighted([0.3, 0.3, 0.3]), emb, rng).anchors
    np.testing.assert_allclose(scaled, centroid, atol=1e-14)


def test_quality_weighted_anchor(rng):
    emb = rows((1, 0), (0, 1), (-1, 0), (0, -1))
    batch = build_anchors(AnchorStrategy.weighted([0.2, 0.2, 0.2, 1.0]), emb, rng)
    np.testing.assert_allclose(batch.anchors, [[0.0, -0.8 / 1.6]])


def test_centroid_is_permutation_invariant(rng):
    emb = [rng.standard_normal((4, 3)) for _ in range(4)]
    a = build_anchors(AnchorStrategy.centroid(), emb, rng).anchors
    b = build_anchors(AnchorStrategy.centroid(), emb[::-1], rng).anchors
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_single_contributor_reduces_to_its_embedding(rng):
    emb = [rng.standard_normal((3, 2)) for _ in range(3)]
    mask = np.zeros((3, 3), dtype=bool)
    mask[:, 1] = True
    np.testing.assert_array_equal(build_anchors(AnchorStrategy.centroid(), emb, rng, availability=mask).anchors, emb[1])


def test_random_modality_copies_one_modality_for_the_batch(rng):
    emb = [np.full((4, 2), float(i)) for i in range(3)]
    batch = build_anchors(AnchorStrategy.random_modality(), emb, rng)
    assert batch.drawn_modality in (0, 1, 2)
    np.testing.assert_array_equal(batch.anchors, emb[batch.drawn_modality])
    assert batch.contributors[:, batch.drawn_modality].all()
    assert batch.contributors.sum() == 4


def test_random_modality_skips_incomplete_modalities(rng):
    emb = [np.full((2, 2), float(i)) for i in range(3)]
    mask = np.array([[True, False, True], [True, True, False]])
    for _ in range(10):
        assert build_anchors(AnchorStrategy.random_modality(), emb, rng, availability=mask).drawn_modality == 0


def test_anchors_are_not_renormalized(rng):
    anchors = build_anchors(AnchorStrategy.centroid(), rows((1, 0), (0, 1)), rng).anchors
    assert np.linalg.norm(anchors) == pytest.approx(np.sqrt(0.5))


def test_pair_without_modalities_is_a_data_error(rng):
    mask = np.array([[True, True], [False, False]])
    emb = [np.ones((2, 2)), np.ones((2, 2))]
    with pytest.raises(DataError, match="first at index 1"):
        build_anchors(AnchorStrategy.centroid(), emb, rng, availability=mask)


def test_mask_shape_must_match(rng):
    with pytest.raises(ShapeError):
        build_anchors(AnchorStrategy.centroid(), [np.ones((2, 2))], rng, availability=np.ones((3, 1), dtype=bool))


def test_weight_count_must_match_modalities(rng):
    with pytest.raises(ConfigError):
        build_anchors(AnchorStrategy.weighted([1, 1]), [np.ones((1, 2))] * 3, rng)


@pytest.mark.parametrize("weights", [[0, 0, 0], [1, -1, 1], []])
def test_invalid_weights(weights):
    with pytest.raises(ConfigError):
        AnchorStrategy.weighted(weights)


@pytest.mark.parametrize(
    "flag, kind, label",
    [
        ("centroid", AnchorKind.CENTROID, "centrobind"),
        ("median", AnchorKind.MEDIAN, "median"),
        ("random", AnchorKind.RANDOM_MODALITY, "random"),
        ("Random-Intra", AnchorKind.RANDOM_MODALITY, "random-intra"),
        ("wavg:0.2,0.2,0.2,1", AnchorKind.WEIGHTED_AVERAGE, "wavg"),
    ],
)
def test_parse_anchor_flag(flag, kind, label):
    strategy = parse_anchor_flag(flag)
    assert strategy.kind is kind
    assert strategy.label == label


def test_parse_anchor_flag_weights_and_freezing():
    assert parse_anchor_flag("wavg:0.2,1").weights == (0.2, 1.0)
    assert parse_anchor_flag("random").freeze_anchor_encoder is True
    assert parse_anchor_flag("random-intra").freeze_anchor_encoder is False


@pytest.mark.parametrize("flag", ["centre", "wavg:a,b", "wavg:"])
def test_parse_anchor_flag_rejects_garbage(flag):
    with pytest.raises(ConfigError):
        parse_anchor_flag(flag)
