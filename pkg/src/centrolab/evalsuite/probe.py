"""
MLP probe classifier on frozen embeddings.
"""

import logging
from typing import Tuple

import numpy as np
from scipy.special import softmax

from centrolab.errors import DataError
from centrolab.guardrails.data_validator import array_validator
from centrolab.models.schemas import ProbeConfig
from centrolab.numkit.adam import AdamState, adam_step
from centrolab.numkit.mlp import Activation, init_mlp, mlp_backward, mlp_forward

logger = logging.getLogger(__name__)


def _standardize(train: np.ndarray, test: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std[std < 1e-12] = 1.0
    return (train - mean) / std, (test - mean) / std


def probe_accuracy(
    train_embeddings: np.ndarray,
    train_labels: np.ndarray,
    test_embeddings: np.ndarray,
    test_labels: np.ndarray,
    config: ProbeConfig,
    rng: np.random.Generator,
) -> float:
    """
    Train a one-hidden-layer probe and report its test accuracy.

    Features are standardized with train statistics. For acc(All) pass the
    row-wise concatenation of all modality embeddings.

    Args:
        train_embeddings: (n_train, d) features
        train_labels: (n_train,) integer labels
        test_embeddings: (n_test, d) features
        test_labels: (n_test,) integer labels
        config: Probe width and schedule
        rng: Random generator for init and shuffling

    Returns:
        Fraction of test rows classified correctly

    Raises:
        DataError: If the train labels hold a single class or a split is empty
    """
    array_validator.require_matrix(train_embeddings, "probe train features", rows=train_labels.shape[0])
    array_validator.require_matrix(
        test_embeddings, "probe test features", cols=train_embeddings.shape[1], rows=test_labels.shape[0]
    )
    if train_labels.size == 0 or test_labels.size == 0:
        raise DataError("probe needs non-empty train and test splits")
    if np.unique(train_labels).size < 2:
        raise DataError("probe training set holds a single class")

    n_classes = int(max(train_labels.max(), test_labels.max())) + 1
    x_train, x_test = _standardize(train_embeddings, test_embeddings)

    params = init_mlp(
        [x_train.shape[1], config.hidden, n_classes],
        rng,
        output_activation=Activation.IDENTITY,
        output_normalize=False,
    )
    state = AdamState.for_params(params, lr=config.lr)
    onehot = np.eye(n_classes)[train_labels]
    n = x_train.shape[0]

    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            rows = order[start:start + config.batch_size]
            logits = mlp_forward(params, x_train[rows])
            grad = (softmax(logits, axis=1) - onehot[rows]) / rows.size
            adam_step(state, params, mlp_backward(params, x_train[rows], grad))

    predictions = np.argmax(mlp_forward(params, x_test), axis=1)
    accuracy = float(np.mean(predictions == test_labels))
    logger.debug(f"probe on {x_train.shape[1]} features: accuracy {accuracy:.4f}")
    return accuracy
