"""
Adaptive anchor construction.

An anchor is built per pair from the embeddings of the modalities that
are available for that pair. Anchors are raw aggregates and are not
renormalized to unit length.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from centrolab.errors import ConfigError, DataError, ShapeError
from centrolab.guardrails.data_validator import array_validator


class AnchorKind(str, Enum):
    """Anchor aggregation rules."""
    CENTROID = "centroid"
    WEIGHTED_AVERAGE = "wavg"
    RANDOM_MODALITY = "random"
    MEDIAN = "median"


@dataclass(frozen=True)
class AnchorStrategy:
    """
    How anchors are formed from the per-modality embeddings.

    Attributes:
        kind: Aggregation rule
        weights: Nonnegative per-modality weights (weighted average only)
        freeze_anchor_encoder: For the random-modality rule, whether the drawn
            modality's encoder skips its update for that batch
    """
    kind: AnchorKind = AnchorKind.CENTROID
    weights: Optional[Tuple[float, ...]] = None
    freeze_anchor_encoder: bool = True

    def __post_init__(self):
        if self.kind is AnchorKind.WEIGHTED_AVERAGE:
            if not self.weights:
                raise ConfigError("weighted-average anchors need per-modality weights")
            if any(w < 0 for w in self.weights):
                raise ConfigError(f"anchor weights must be nonnegative, got {list(self.weights)}")
            if not any(w > 0 for w in self.weights):
                raise ConfigError("anchor weights are all zero")

    @property
    def label(self) -> str:
        """Method name used in reports and summaries."""
        if self.kind is AnchorKind.CENTROID:
            return "centrobind"
        if self.kind is AnchorKind.RANDOM_MODALITY and not self.freeze_anchor_encoder:
            return "random-intra"
        return self.kind.value

    @classmethod
    def centroid(cls) -> "AnchorStrategy":
        return cls(AnchorKind.CENTROID)

    @classmethod
    def weighted(cls, weights: Sequence[float]) -> "AnchorStrategy":
        return cls(AnchorKind.WEIGHTED_AVERAGE, weights=tuple(float(w) for w in weights))

    @classmethod
    def random_modality(cls, freeze_anchor_encoder: bool = True) -> "AnchorStrategy":
        return cls(AnchorKind.RANDOM_MODALITY, freeze_anchor_encoder=freeze_anchor_encoder)

    @classmethod
    def median(cls) -> "AnchorStrategy":
        return cls(AnchorKind.MEDIAN)


@dataclass
class AnchorBatch:
    """
    Anchors for one batch.

    Attributes:
        anchors: (B, d) anchor vectors a_j
        contributors: (B, M) boolean mask, row j is the set I_j
        strategy: Strategy that produced the anchors
        drawn_modality: Modality used by the random-modality rule, else None
    """
    anchors: np.ndarray
    contributors: np.ndarray
    strategy: AnchorStrategy
    drawn_modality: Optional[int] = None

    @property
    def batch_size(self) -> int:
        return self.anchors.shape[0]


def parse_anchor_flag(flag: str) -> AnchorStrategy:
    """
    Parse `--anchor {centroid|wavg:w1,w2,..|random|random-intra|median}`.

    Raises:
        ConfigError: On an unknown flag or malformed weights
    """
    flag = flag.strip().lower()
    if flag == "centroid":
        return AnchorStrategy.centroid()
    if flag == "median":
        return AnchorStrategy.median()
    if flag == "random":
        return AnchorStrategy.random_modality(freeze_anchor_encoder=True)
    if flag == "random-intra":
        return AnchorStrategy.random_modality(freeze_anchor_encoder=False)
    if flag.startswith("wavg:"):
        try:
            weights = [float(w) for w in flag[len("wavg:"):].split(",") if w.strip()]
        except ValueError as e:
            raise ConfigError(f"malformed anchor weights in '{flag}': {e}") from e
        return AnchorStrategy.weighted(weights)
    raise ConfigError(f"unknown anchor strategy '{flag}'")


def build_anchors(
    strategy: AnchorStrategy,
    embeddings: Sequence[np.ndarray],
    rng: np.random.Generator,
    availability: Optional[np.ndarray] = None,
) -> AnchorBatch:
    """
    Aggregate per-modality embeddings of augmented views into anchors.

    Args:
        strategy: Aggregation rule
        embeddings: M matrices of shape (B, d), one per modality
        rng: Random generator (random-modality rule only)
        availability: Optional (B, M) boolean mask of present modalities;
            all modalities present when omitted

    Returns:
        AnchorBatch

    Raises:
        DataError: If some pair has no available modality
        ShapeError: If the embedding batches disagree in shape
    """
    if not embeddings:
        raise ShapeError("need embeddings from at least one modality")

    stacked = np.stack([np.asarray(e, dtype=np.float64) for e in embeddings])
    n_mod, batch, _ = stacked.shape

    if availability is None:
        mask = np.ones((batch, n_mod), dtype=bool)
    else:
        mask = np.asarray(availability, dtype=bool)
        if mask.shape != (batch, n_mod):
            raise ShapeError(f"availability mask has shape {mask.shape}, expected ({batch}, {n_mod})")
    array_validator.require_nonempty_rows(mask, "anchor contributors")

    drawn = None
    if strategy.kind is AnchorKind.CENTROID:
        w = mask.T[:, :, None].astype(np.float64)
        anchors = (stacked * w).sum(axis=0) / w.sum(axis=0)

    elif strategy.kind is AnchorKind.WEIGHTED_AVERAGE:
        if len(strategy.weights) != n_mod:
            raise ConfigError(f"{len(strategy.weights)} anchor weights for {n_mod} modalities")
        w = mask.T * np.asarray(strategy.weights)[:, None]
        totals = w.sum(axis=0)
        if np.any(totals <= 0):
            raise DataError("a pair's available modalities all carry zero anchor weight")
        anchors = (stacked * w[:, :, None]).sum(axis=0) / totals[:, None]

    elif strategy.kind is AnchorKind.RANDOM_MODALITY:
        candidates = np.flatnonzero(mask.all(axis=0))
        if candidates.size == 0:
            raise DataError("no modality is available for every pair of the batch")
        drawn = int(rng.choice(candidates))
        anchors = stacked[drawn].copy()
        mask = np.zeros_like(mask)
        mask[:, drawn] = True

    elif strategy.kind is AnchorKind.MEDIAN:
        masked = np.where(mask.T[:, :, None], stacked, np.nan)
        anchors = np.nanmedian(masked, axis=0)

    else:
        raise ConfigError(f"unsupported anchor kind {strategy.kind}")

    return AnchorBatch(anchors=anchors, contributors=mask, strategy=strategy, drawn_modality=drawn)
