import numpy as np
import pytest

from centrolab.errors import DataError, NumericError, ShapeError
from centrolab.numkit.adam import AdamState, adam_step
from centrolab.numkit.checkpoint import MAGIC, decode_mlp, encode_mlp, load_mlp, save_mlp
from centrolab.numkit.mlp import (
    Activation,
    Layer,
    MlpGrads,
    MlpParams,
    init_mlp,
    mlp_backward,
    mlp_forward,
)
from centrolab.numkit.rng import derive_seed, make_rng


def scalar_net(weight: float, bias: float = 0.0) -> MlpParams:
    return MlpParams(
        layers=[Layer(np.array([[weight]]), np.array([bias]), Activation.IDENTITY)],
        output_normalize=False,
    )


# -----------------------------
# FORWARD
# -----------------------------
def test_identity_layer_passes_input_through():
    params = MlpParams(
        layers=[Layer(np.eye(2), np.zeros(2), Activation.IDENTITY)],
        output_normalize=False,
    )
    x = np.array([[0.3, -1.7]])
    np.testing.assert_array_equal(mlp_forward(params, x), x)


def test_normalized_outputs_lie_on_unit_sphere(rng):
    params = init_mlp([5, 7, 3], rng)
    out = mlp_forward(params, rng.standard_normal((20, 5)))
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)


def test_two_layer_sigmoid_net_matches_hand_evaluation():
    params = MlpParams(
        layers=[
            Layer(np.array([[1.0, 2.0], [0.0, 0.0]]), np.zeros(2), Activation.SIGMOID),
            Layer(np.array([[1.0], [1.0]]), np.array([0.5]), Activation.IDENTITY),
        ],
        output_normalize=False,
    )
    sigmoid = lambda t: 1.0 / (1.0 + np.exp(-t))
    out = mlp_forward(params, np.array([[1.0, 0.0]]))
    assert out[0, 0] == pytest.approx(sigmoid(1.0) + sigmoid(2.0) + 0.5, abs=1e-15)


def test_forward_rejects_wrong_input_width(rng):
    params = init_mlp([4, 3], rng)
    with pytest.raises(ShapeError):
        mlp_forward(params, np.zeros((2, 5)))


def test_layers_must_chain():
    with pytest.raises(ShapeError):
        MlpParams(layers=[Layer(np.zeros((2, 3)), np.zeros(3)), Layer(np.zeros((4, 1)), np.zeros(1))])


def test_forward_is_deterministic(rng):
    params = init_mlp([6, 8, 4], rng)
    x = rng.standard_normal((10, 6))
    assert mlp_forward(params, x).tobytes() == mlp_forward(params, x).tobytes()


# -----------------------------
# BACKWARD
# -----------------------------
def test_zero_output_gradient_gives_zero_gradients(rng):
    params = init_mlp([4, 6, 3], rng)
    x = rng.standard_normal((5, 4))
    grads = mlp_backward(params, x, np.zeros((5, 3)))
    for g in grads.arrays():
        assert not np.any(g)


def test_scalar_backward_matches_chain_rule():
    grads = mlp_backward(scalar_net(3.0), np.array([[2.0]]), np.array([[5.0]]))
    assert grads.weights[0][0, 0] == pytest.approx(10.0)
    assert grads.biases[0][0] == pytest.approx(5.0)


def test_backward_rejects_wrong_grad_shape(rng):
    params = init_mlp([4, 3], rng)
    with pytest.raises(ShapeError):
        mlp_backward(params, np.zeros((2, 4)), np.zeros((2, 2)))


@pytest.mark.parametrize("normalize", [True, False])
@pytest.mark.parametrize("trial", range(10))
def test_backward_matches_finite_differences(normalize, trial, finite_difference):
    rng = make_rng(derive_seed(500, trial, normalize))
    params = init_mlp([4, 5, 3], rng, hidden_activation=Activation.SIGMOID, output_normalize=normalize)
    x = rng.standard_normal((6, 4))
    weights = rng.standard_normal((6, 3))

    def loss():
        return float(np.sum(mlp_forward(params, x) * weights))

    analytic = mlp_backward(params, x, weights)
    for p, g in zip(params.arrays(), analytic.arrays()):
        np.testing.assert_allclose(g, finite_difference(loss, p), rtol=1e-4, atol=1e-7)


def test_relu_backward_matches_finite_differences(finite_difference):
    rng = make_rng(77)
    params = init_mlp([3, 6, 6, 2], rng)
    for layer in params.layers:
        layer.bias += 0.1
    x = rng.standard_normal((4, 3))
    weights = rng.standard_normal((4, 2))

    def loss():
        return float(np.sum(mlp_forward(params, x) * weights))

    analytic = mlp_backward(params, x, weights)
    for p, g in zip(params.arrays(), analytic.arrays()):
        np.testing.assert_allclose(g, finite_difference(loss, p), rtol=1e-4, atol=1e-7)


# -----------------------------
# ADAM
# -----------------------------
def test_zero_gradients_leave_fresh_params_unchanged(rng):
    params = init_mlp([3, 4, 2], rng)
    before = [a.copy() for a in params.arrays()]
    state = AdamState.for_params(params)
    zeros = MlpGrads([np.zeros_like(l.weight) for l in params.layers], [np.zeros_like(l.bias) for l in params.layers])

    adam_step(state, params, zeros)

    assert state.step == 1
    for a, b in zip(params.arrays(), before):
        np.testing.assert_array_equal(a, b)


def test_zero_gradients_decay_moments():
    params = scalar_net(0.0)
    state = AdamState.for_params(params, lr=0.1)
    adam_step(state, params, MlpGrads([np.array([[1.0]])], [np.array([0.0])]))
    m_before, v_before = state.m[0].copy(), state.v[0].copy()

    adam_step(state, params, MlpGrads([np.array([[0.0]])], [np.array([0.0])]))

    np.testing.assert_allclose(state.m[0], state.beta1 * m_before)
    np.testing.assert_allclose(state.v[0], state.beta2 * v_before)


def test_first_step_moves_by_learning_rate():
    params = scalar_net(0.0)
    state = AdamState.for_params(params, lr=0.1)
    adam_step(state, params, MlpGrads([np.array([[1.0]])], [np.array([0.0])]))
    assert params.layers[0].weight[0, 0] == pytest.approx(-0.1, rel=1e-6)


def test_constant_gradient_drifts_monotonically_with_bounded_steps():
    params = scalar_net(0.0)
    state = AdamState.for_params(params, lr=0.05)
    grads = MlpGrads([np.array([[0.7]])], [np.array([0.0])])
    previous = 0.0
    for _ in range(50):
        adam_step(state, params, grads)
        current = params.layers[0].weight[0, 0]
        assert current < previous
        assert previous - current <= 0.05 * (1 + 1e-6)
        previous = current


def test_nan_gradient_is_rejected():
    params = scalar_net(1.0)
    state = AdamState.for_params(params)
    with pytest.raises(NumericError, match="non-finite gradient"):
        adam_step(state, params, MlpGrads([np.array([[np.nan]])], [np.array([0.0])]))
    assert params.layers[0].weight[0, 0] == 1.0


def test_weight_decay_shrinks_params_without_gradient():
    params = scalar_net(2.0)
    state = AdamState.for_params(params, lr=0.1, weight_decay=0.5)
    adam_step(state, params, MlpGrads([np.array([[0.0]])], [np.array([0.0])]))
    assert params.layers[0].weight[0, 0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0)


# -----------------------------
# CHECKPOINTS AND SEEDS
# -----------------------------
def test_checkpoint_preserves_parameters_exactly(rng, tmp_path):
    params = init_mlp([5, 7, 3], rng, hidden_activation=Activation.SIGMOID)
    loaded = load_mlp(save_mlp(params, tmp_path / "enc.ckpt"))

    assert loaded.checksum() == params.checksum()
    assert [l.activation for l in loaded.layers] == [l.activation for l in params.layers]
    assert loaded.output_normalize is True


def test_checkpoint_starts_with_magic(rng):
    assert encode_mlp(init_mlp([2, 2], rng)).startswith(MAGIC)


def test_corrupt_checkpoints_are_rejected(rng):
    blob = encode_mlp(init_mlp([3, 2], rng))
    with pytest.raises(DataError, match="magic"):
        decode_mlp(b"XXXXXXXX" + blob[8:])
    with pytest.raises(DataError, match="payload"):
        decode_mlp(blob[:-8])


def test_same_seed_same_stream():
    assert np.array_equal(make_rng(5).standard_normal(8), make_rng(5).standard_normal(8))
    assert not np.array_equal(make_rng(5).standard_normal(8), make_rng(6).standard_normal(8))


def test_derived_seeds_depend_on_every_key():
    assert derive_seed(1, "pretrained", "centrobind") == derive_seed(1, "pretrained", "centrobind")
    assert derive_seed(1, "pretrained", "centrobind") != derive_seed(1, "random", "centrobind")
    assert derive_seed(1, "a") != derive_seed(2, "a")
    assert 0 <= derive_seed(3, "x") < 2 ** 63
