"""
Adaptive-moment optimizer for MlpParams.

Bias-corrected Adam with optional decoupled weight decay. Moments are
kept per parameter array and updated in place.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from centrolab.errors import NumericError, ShapeError
from centrolab.numkit.mlp import MlpGrads, MlpParams


@dataclass
class AdamState:
    """Optimizer moments and hyper-parameters for one encoder."""
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: MlpParams, **hyper) -> "AdamState":
        """Zero moments shaped like `params`."""
        arrays = params.arrays()
        return cls(
            m=[np.zeros_like(a) for a in arrays],
            v=[np.zeros_like(a) for a in arrays],
            **hyper,
        )


def adam_step(state: AdamState, params: MlpParams, grads: MlpGrads) -> Tuple[MlpParams, AdamState]:
    """
    Apply one Adam update in place.

    Args:
        state: Optimizer state (moments are created on first use)
        params: Encoder parameters to update
        grads: Gradients matching params

    Returns:
        Tuple of (params, state), both updated

    Raises:
        NumericError: If any gradient entry is NaN or infinite
        ShapeError: If gradient shapes do not match parameters
    """
    p_arrays = params.arrays()
    g_arrays = grads.arrays()

    if len(p_arrays) != len(g_arrays):
        raise ShapeError(f"{len(g_arrays)} gradient arrays for {len(p_arrays)} parameters")

    for k, (p, g) in enumerate(zip(p_arrays, g_arrays)):
        if p.shape != g.shape:
            raise ShapeError(f"gradient {k} has shape {g.shape}, parameter is {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(
                f"non-finite gradient in parameter {k} (layer {k // 2}, "
                f"{'weight' if k % 2 == 0 else 'bias'}) at step {state.step + 1}"
            )

    if not state.m:
        state.m = [np.zeros_like(p) for p in p_arrays]
        state.v = [np.zeros_like(p) for p in p_arrays]

    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step

    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        if state.weight_decay:
            p -= state.lr * state.weight_decay * p
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)

    return params, state
