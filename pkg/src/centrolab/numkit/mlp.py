"""
Multilayer perceptron encoders with hand-derived gradients.

Layers compute `act(x @ W + b)` with W stored as (in_dim, out_dim). When
`output_normalize` is set the final activations are projected onto the
unit sphere and the backward pass includes the Jacobian of that
projection.
"""

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import expit

from centrolab.config import NORM_EPS
from centrolab.errors import ShapeError
from centrolab.guardrails.data_validator import array_validator


class Activation(str, Enum):
    """Element-wise layer activations."""
    RELU = "relu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


@dataclass
class Layer:
    """One affine layer followed by an activation."""
    weight: np.ndarray
    bias: np.ndarray
    activation: Activation = Activation.RELU

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class MlpParams:
    """
    Parameters of an MLP encoder.

    Invariant: layer dimensions chain, i.e. layers[k].out_dim equals
    layers[k+1].in_dim.
    """
    layers: List[Layer]
    output_normalize: bool = True

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("an MLP needs at least one layer")
        for k, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.out_dim != b.in_dim:
                raise ShapeError(
                    f"layer {k} outputs {a.out_dim} features but layer {k + 1} expects {b.in_dim}"
                )
        for k, layer in enumerate(self.layers):
            if layer.bias.shape != (layer.out_dim,):
                raise ShapeError(f"layer {k} bias has shape {layer.bias.shape}, expected ({layer.out_dim},)")

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def arrays(self) -> List[np.ndarray]:
        """Flat list [W0, b0, W1, b1, ...] sharing memory with the layers."""
        out: List[np.ndarray] = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def copy(self) -> "MlpParams":
        return MlpParams(
            layers=[Layer(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers],
            output_normalize=self.output_normalize,
        )

    def checksum(self) -> str:
        """SHA-256 over the little-endian parameter bytes."""
        h = hashlib.sha256()
        for arr in self.arrays():
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass
class MlpGrads:
    """Gradients with the same layout as MlpParams.arrays()."""
    weights: List[np.ndarray] = field(default_factory=list)
    biases: List[np.ndarray] = field(default_factory=list)

    def arrays(self) -> List[np.ndarray]:
        out: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def __add__(self, other: "MlpGrads") -> "MlpGrads":
        return MlpGrads(
            weights=[a + b for a, b in zip(self.weights, other.weights)],
            biases=[a + b for a, b in zip(self.biases, other.biases)],
        )


def init_mlp(
    dims: Sequence[int],
    rng: np.random.Generator,
    hidden_activation: Activation = Activation.RELU,
    output_activation: Activation = Activation.IDENTITY,
    output_normalize: bool = True,
) -> MlpParams:
    """
    Initialize an MLP with He-scaled Gaussian weights and zero biases.

    Args:
        dims: Layer widths, input first (e.g. [16, 64, 64, 16])
        rng: Random generator
        hidden_activation: Activation of every layer but the last
        output_activation: Activation of the last layer
        output_normalize: Project outputs onto the unit sphere

    Returns:
        Freshly initialized MlpParams
    """
    if len(dims) < 2:
        raise ShapeError(f"need at least input and output widths, got {list(dims)}")

    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        last = k == len(dims) - 2
        weight = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
        layers.append(
            Layer(
                weight=weight,
                bias=np.zeros(fan_out),
                activation=output_activation if last else hidden_activation,
            )
        )
    return MlpParams(layers=layers, output_normalize=output_normalize)


def _activate(pre: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return np.maximum(pre, 0.0)
    if activation is Activation.SIGMOID:
        return expit(pre)
    return pre


def _activation_grad(pre: np.ndarray, post: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RELU:
        return (pre > 0).astype(np.float64)
    if activation is Activation.SIGMOID:
        return post * (1.0 - post)
    return np.ones_like(pre)


def _forward_cached(params: MlpParams, inputs: np.ndarray) -> Tuple[np.ndarray, list]:
    array_validator.require_matrix(inputs, "mlp inputs", cols=params.input_dim)

    cache = []
    h = np.asarray(inputs, dtype=np.float64)
    for layer in params.layers:
        pre = h @ layer.weight + layer.bias
        post = _activate(pre, layer.activation)
        cache.append((h, pre, post))
        h = post

    if params.output_normalize:
        norms = np.linalg.norm(h, axis=1, keepdims=True)
        clamped = np.maximum(norms, NORM_EPS)
        out = h / clamped
        cache.append((norms, clamped, out))
        return out, cache

    return h, cache


def mlp_forward(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """
    Run a batch through the encoder.

    Args:
        params: Encoder parameters
        inputs: (batch, input_dim) matrix

    Returns:
        (batch, output_dim) matrix, rows unit-norm iff output_normalize

    Raises:
        ShapeError: If inputs do not match the first layer
    """
    out, _ = _forward_cached(params, inputs)
    return out


def mlp_backward(params: MlpParams, inputs: np.ndarray, grad_out: np.ndarray) -> MlpGrads:
    """
    Backpropagate an output gradient to every weight and bias.

    Args:
        params: Encoder parameters
        inputs: (batch, input_dim) matrix used in the forward pass
        grad_out: d loss / d output, same shape as the forward output

    Returns:
        MlpGrads with one (weight, bias) gradient pair per layer

    Raises:
        ShapeError: If grad_out does not match the forward output shape
    """
    out, cache = _forward_cached(params, inputs)
    if grad_out.shape != out.shape:
        raise ShapeError(f"grad_out has shape {grad_out.shape}, forward output is {out.shape}")

    g = np.asarray(grad_out, dtype=np.float64)

    if params.output_normalize:
        norms, clamped, y = cache.pop()
        radial = np.sum(y * g, axis=1, keepdims=True)
        # below the clamp the map is a fixed rescale, not a projection
        g = np.where(norms > NORM_EPS, (g - y * radial) / clamped, g / clamped)

    weights: List[np.ndarray] = [None] * len(params.layers)
    biases: List[np.ndarray] = [None] * len(params.layers)
    for k in range(len(params.layers) - 1, -1, -1):
        layer = params.layers[k]
        h_in, pre, post = cache[k]
        g = g * _activation_grad(pre, post, layer.activation)
        weights[k] = h_in.T @ g
        biases[k] = g.sum(axis=0)
        g = g @ layer.weight.T

    return MlpGrads(weights=weights, biases=biases)
