"""
InfoNCE losses with analytic gradients.

This module provides:
- info_nce: batch InfoNCE where row k of `left` is contrasted against
  every row of `right`, the positive being row k
- centrobind_loss: the symmetrized anchor loss, gradients to embeddings only
- fabind_loss: the same objective against a frozen anchor modality

All logs are natural logs. Softmax normalizers use max-subtracted
log-sum-exp.
"""

from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp, softmax

from centrolab.errors import ShapeError
from centrolab.guardrails.data_validator import array_validator


class ContrastiveLoss(NamedTuple):
    """Loss value and gradients with respect to both inputs."""
    value: float
    grad_left: np.ndarray
    grad_right: np.ndarray


class AnchoredLoss(NamedTuple):
    """Loss value and gradient with respect to the trainable embeddings."""
    value: float
    grad: np.ndarray


def _check_pair(left: np.ndarray, right: np.ndarray) -> None:
    array_validator.require_matrix(left, "left embeddings")
    array_validator.require_matrix(right, "right embeddings", cols=left.shape[1])
    if left.shape[0] != right.shape[0]:
        raise ShapeError(f"batch mismatch: {left.shape[0]} vs {right.shape[0]} rows")
    if left.shape[0] < 1:
        raise ShapeError("InfoNCE needs a batch of at least one pair")


def info_nce(left: np.ndarray, right: np.ndarray, tau: float) -> ContrastiveLoss:
    """
    Batch InfoNCE, L = -(1/B) Σ_k log softmax_j(left_k · right_j / τ)[k].

    Args:
        left: (B, d) rows playing the fixed side of each softmax
        right: (B, d) rows contrasted over, positive at the same index
        tau: Temperature, must be positive

    Returns:
        ContrastiveLoss(value, grad_left, grad_right)

    Raises:
        ConfigError: If tau <= 0
        ShapeError: On batch or width mismatch
    """
    tau = array_validator.require_temperature(tau)
    _check_pair(left, right)

    batch = left.shape[0]
    logits = left @ right.T / tau
    loss = float(np.mean(logsumexp(logits, axis=1) - np.diag(logits)))

    dlogits = softmax(logits, axis=1)
    dlogits[np.diag_indices(batch)] -= 1.0
    dlogits /= batch

    grad_left = dlogits @ right / tau
    grad_right = dlogits.T @ left / tau
    return ContrastiveLoss(loss, grad_left, grad_right)


def _as_matrix(anchors) -> np.ndarray:
    return getattr(anchors, "anchors", anchors)


def centrobind_loss(anchors, embeddings: np.ndarray, tau: float) -> AnchoredLoss:
    """
    Symmetrized anchor loss I_NCE(A; Z_i) + I_NCE(Z_i; A).

    The first term contrasts anchor k against all embeddings, the second
    contrasts embedding k against all anchors; both share the positive
    score a_k · z_k. Anchors are treated as constants.

    Args:
        anchors: AnchorBatch or (B, d) anchor matrix
        embeddings: (B, d) embeddings of one modality, paired with anchors by row
        tau: Temperature

    Returns:
        AnchoredLoss(value, grad with respect to embeddings)
    """
    a = _as_matrix(anchors)
    anchor_side = info_nce(a, embeddings, tau)
    embed_side = info_nce(embeddings, a, tau)
    return AnchoredLoss(
        anchor_side.value + embed_side.value,
        anchor_side.grad_right + embed_side.grad_left,
    )


def fabind_loss(
    anchor_embeddings: np.ndarray,
    other_embeddings: np.ndarray,
    tau: float,
    symmetric: bool = True,
) -> ContrastiveLoss:
    """
    InfoNCE against a frozen anchor modality.

    Args:
        anchor_embeddings: (B, d) outputs of the frozen anchor encoder
        other_embeddings: (B, d) outputs of the trainable encoder
        tau: Temperature
        symmetric: Add the reverse direction (default), else anchor -> other only

    Returns:
        ContrastiveLoss whose grad_left (anchor side) is identically zero
    """
    if symmetric:
        value, grad = centrobind_loss(anchor_embeddings, other_embeddings, tau)
    else:
        one_way = info_nce(anchor_embeddings, other_embeddings, tau)
        value, grad = one_way.value, one_way.grad_right
    return ContrastiveLoss(value, np.zeros_like(anchor_embeddings), grad)

