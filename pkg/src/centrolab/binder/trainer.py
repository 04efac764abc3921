"""
Training loops for backbone pretraining and binding.

This module handles:
- Uni-modal InfoNCE pretraining between two augmented views
- Adaptive-anchor binding (centroid, weighted average, random modality, median)
- Fixed-anchor binding against a frozen modality
- Loss traces and their CSV form
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from centrolab.anchors.strategies import AnchorKind, AnchorStrategy, build_anchors, parse_anchor_flag
from centrolab.binder.encoders import EncoderSet
from centrolab.errors import ConfigError, NumericError
from centrolab.losses.infonce import centrobind_loss, fabind_loss, info_nce
from centrolab.models.schemas import BindConfig, PretrainConfig
from centrolab.numkit.adam import AdamState, adam_step
from centrolab.numkit.mlp import MlpParams, mlp_backward, mlp_forward
from centrolab.synthgen.dataset import MultiModalDataset, augment_batch

logger = logging.getLogger(__name__)


@dataclass
class TrainTrace:
    """
    Per-epoch mean loss of every modality.

    `losses` is (epochs, M); modalities that were not trained hold NaN.
    """
    method: str
    losses: np.ndarray
    wall_clock: float = 0.0
    checksums: List[str] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return self.losses.shape[0]

    def total(self) -> np.ndarray:
        """Summed loss over trained modalities, one value per epoch."""
        if self.losses.size == 0:
            return np.zeros(self.epochs)
        return np.nansum(self.losses, axis=1)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"epoch": e + 1, "modality": i + 1, "loss": float(self.losses[e, i])}
            for e in range(self.epochs)
            for i in range(self.losses.shape[1])
            if np.isfinite(self.losses[e, i])
        ]
        return pd.DataFrame(rows, columns=["epoch", "modality", "loss"])

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path], method: str, n_modalities: int) -> "TrainTrace":
        frame = pd.read_csv(path)
        epochs = int(frame["epoch"].max()) if len(frame) else 0
        losses = np.full((epochs, n_modalities), np.nan)
        for row in frame.itertuples(index=False):
            losses[int(row.epoch) - 1, int(row.modality) - 1] = float(row.loss)
        return cls(method=method, losses=losses)


def epochs_to_saturation(trace: TrainTrace, fraction: float = 0.95) -> int:
    """
    First epoch (1-based) whose total loss has covered `fraction` of the
    overall decrease from epoch 1 to the last epoch.
    """
    total = trace.total()
    if total.size == 0:
        return 0
    drop = total[0] - total[-1]
    if drop <= 0:
        return 1
    reached = np.flatnonzero(total[0] - total >= fraction * drop)
    return int(reached[0]) + 1


def _batches(n: int, batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    order = rng.permutation(n)
    batches = [order[s:s + batch_size] for s in range(0, n, batch_size)]
    # a singleton batch has no negatives
    if len(batches) > 1 and batches[-1].size < 2:
        batches[-2] = np.concatenate([batches[-2], batches[-1]])
        batches.pop()
    return batches


def _progress(iterable, desc: str):
    return tqdm(iterable, desc=desc, leave=False, disable=not logger.isEnabledFor(logging.INFO))


def _optimizers(encoders: EncoderSet, config: BindConfig) -> List[AdamState]:
    return [
        AdamState.for_params(
            params,
            lr=config.lr,
            beta1=config.beta1,
            beta2=config.beta2,
            eps=config.adam_eps,
            weight_decay=config.weight_decay,
        )
        for params in encoders.encoders
    ]


def _check_loss(value: float, where: str, trace_fn: Callable[[], TrainTrace]) -> None:
    if not np.isfinite(value):
        raise NumericError(f"non-finite loss {value} {where}", trace=trace_fn())


def pretrain_backbone(
    dataset: MultiModalDataset,
    modality: int,
    encoder: MlpParams,
    config: PretrainConfig,
    rng: np.random.Generator,
) -> MlpParams:
    """
    Pretrain one encoder with uni-modal InfoNCE between two augmentations.

    Args:
        dataset: Dataset with retained latents (for augmentation)
        modality: 0-based modality index
        encoder: Initial encoder, left untouched
        config: Pretraining schedule
        rng: Random generator for shuffling and augmentation

    Returns:
        Trained copy of the encoder (the initialization itself when epochs is 0)
    """
    params = encoder.copy()
    state = AdamState.for_params(params, lr=config.lr)
    train_rows = dataset.indices("train")

    for epoch in _progress(range(config.epochs), f"pretrain X{modality + 1}"):
        epoch_losses = []
        for batch in _batches(train_rows.size, config.batch_size, rng):
            rows = train_rows[batch]
            view_a = augment_batch(dataset, modality, rows, rng)
            view_b = augment_batch(dataset, modality, rows, rng)
            emb_a = mlp_forward(params, view_a)
            emb_b = mlp_forward(params, view_b)

            forward = info_nce(emb_a, emb_b, config.tau)
            backward = info_nce(emb_b, emb_a, config.tau)
            loss = forward.value + backward.value
            if not np.isfinite(loss):
                raise NumericError(f"non-finite pretraining loss for X{modality + 1} at epoch {epoch + 1}")

            grads = mlp_backward(params, view_a, forward.grad_left + backward.grad_right)
            grads = grads + mlp_backward(params, view_b, forward.grad_right + backward.grad_left)
            adam_step(state, params, grads)
            epoch_losses.append(loss)

        logger.debug(f"pretrain X{modality + 1} epoch {epoch + 1}: loss {np.mean(epoch_losses):.6f}")

    return params


def train_adaptive(
    dataset: MultiModalDataset,
    encoders: EncoderSet,
    config: BindConfig,
    rng: np.random.Generator,
    strategy: Optional[AnchorStrategy] = None,
) -> Tuple[EncoderSet, TrainTrace]:
    """
    Adaptive-anchor binding.

    Per batch: embed augmented views of every modality, build anchors from
    them, then give each trainable modality one optimizer step on the
    symmetrized anchor loss of its un-augmented embeddings. Anchors stay
    fixed across the per-modality updates of a batch.

    Args:
        dataset: Training dataset with retained latents
        encoders: Initial encoders, left untouched
        config: Binding hyper-parameters
        rng: Random generator
        strategy: Anchor rule; parsed from config.anchor when omitted

    Returns:
        Tuple of (trained EncoderSet, TrainTrace)

    Raises:
        NumericError: If a loss becomes non-finite (carries the partial trace)
    """
    strategy = strategy or parse_anchor_flag(config.anchor)
    encoders = encoders.copy()
    optimizers = _optimizers(encoders, config)
    n_mod = encoders.n_modalities
    train_rows = dataset.indices("train")
    losses = np.full((config.epochs, n_mod), np.nan)
    skip_drawn = strategy.kind is AnchorKind.RANDOM_MODALITY and strategy.freeze_anchor_encoder
    started = time.perf_counter()

    def partial_trace() -> TrainTrace:
        return TrainTrace(strategy.label, losses.copy(), time.perf_counter() - started, encoders.checksums())

    for epoch in _progress(range(config.epochs), f"bind {strategy.label}"):
        sums = np.zeros(n_mod)
        counts = np.zeros(n_mod)

        for batch in _batches(train_rows.size, config.batch_size, rng):
            rows = train_rows[batch]
            views = [augment_batch(dataset, i, rows, rng) for i in range(n_mod)]
            anchor_inputs = [encoders.embed(i, views[i]) for i in range(n_mod)]
            anchors = build_anchors(strategy, anchor_inputs, rng)

            for i in range(n_mod):
                if not encoders.trainable[i]:
                    continue
                if skip_drawn and i == anchors.drawn_modality:
                    continue
                x = dataset.modalities[i][rows]
                params = encoders.encoders[i]
                value, grad = centrobind_loss(anchors, mlp_forward(params, x), config.tau)
                _check_loss(value, f"for X{i + 1} at epoch {epoch + 1}", partial_trace)
                adam_step(optimizers[i], params, mlp_backward(params, x, grad))
                sums[i] += value
                counts[i] += 1

        losses[epoch] = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        logger.debug(f"bind {strategy.label} epoch {epoch + 1}: losses {np.round(losses[epoch], 5).tolist()}")

    trace = partial_trace()
    logger.info(
        f"Finished {strategy.label} binding: {config.epochs} epochs in {trace.wall_clock:.1f}s, "
        f"final total loss {trace.total()[-1] if trace.epochs else float('nan'):.4f}"
    )
    return encoders, trace


def train_centrobind(
    dataset: MultiModalDataset,
    encoders: EncoderSet,
    config: BindConfig,
    rng: np.random.Generator,
) -> Tuple[EncoderSet, TrainTrace]:
    """Adaptive binding with centroid anchors."""
    return train_adaptive(dataset, encoders, config, rng, strategy=AnchorStrategy.centroid())


def train_fabind(
    dataset: MultiModalDataset,
    encoders: EncoderSet,
    config: BindConfig,
    rng: np.random.Generator,
) -> Tuple[EncoderSet, TrainTrace]:
    """
    Fixed-anchor binding.

    Every trainable modality other than `config.anchor_modality` is trained
    against the frozen anchor encoder's embeddings of the same pairs.

    Args:
        dataset: Training dataset
        encoders: Initial encoders; the anchor encoder must be flagged frozen
        config: Binding hyper-parameters with anchor_modality set (1-based)
        rng: Random generator

    Returns:
        Tuple of (trained EncoderSet, TrainTrace)

    Raises:
        ConfigError: If the anchor modality is missing, out of range or trainable
    """
    if config.anchor_modality is None:
        raise ConfigError("FABind needs anchor_modality")
    anchor = config.anchor_modality - 1
    if not 0 <= anchor < encoders.n_modalities:
        raise ConfigError(f"anchor modality X{config.anchor_modality} outside 1..{encoders.n_modalities}")
    if encoders.trainable[anchor]:
        raise ConfigError(f"anchor encoder X{config.anchor_modality} must be frozen")

    encoders = encoders.copy()
    optimizers = _optimizers(encoders, config)
    n_mod = encoders.n_modalities
    train_rows = dataset.indices("train")
    losses = np.full((config.epochs, n_mod), np.nan)
    method = f"fabind:{config.anchor_modality}"
    started = time.perf_counter()

    def partial_trace() -> TrainTrace:
        return TrainTrace(method, losses.copy(), time.perf_counter() - started, encoders.checksums())

    for epoch in _progress(range(config.epochs), f"bind {method}"):
        sums = np.zeros(n_mod)
        counts = np.zeros(n_mod)

        for batch in _batches(train_rows.size, config.batch_size, rng):
            rows = train_rows[batch]
            anchor_emb = encoders.embed(anchor, dataset.modalities[anchor][rows])

            for i in range(n_mod):
                if i == anchor or not encoders.trainable[i]:
                    continue
                x = dataset.modalities[i][rows]
                params = encoders.encoders[i]
                result = fabind_loss(anchor_emb, mlp_forward(params, x), config.tau, symmetric=config.symmetric)
                _check_loss(result.value, f"for X{i + 1} at epoch {epoch + 1}", partial_trace)
                adam_step(optimizers[i], params, mlp_backward(params, x, result.grad_right))
                sums[i] += result.value
                counts[i] += 1

        losses[epoch] = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        logger.debug(f"bind {method} epoch {epoch + 1}: losses {np.round(losses[epoch], 5).tolist()}")

    trace = partial_trace()
    logger.info(
        f"Finished {method} binding: {config.epochs} epochs in {trace.wall_clock:.1f}s, "
        f"final total loss {trace.total()[-1] if trace.epochs else float('nan'):.4f}"
    )
    return encoders, trace
