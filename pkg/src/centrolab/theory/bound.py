"""
Lower bound on the anchor InfoNCE term of the centroid objective.

For a batch of B pairs over M modalities, with anchors a_k the mean of the
augmented embeddings f_l(x'_{l,k}):

    B · I_NCE(A; f_i(X_i) | τ)
        >= Σ_l I_NCE(f_l(X'_l); f_i(X_i) | τM/B) - Σ_k log C_k

where C_k = (c_min + c_max)^2 / (4 c_min c_max) and c_min, c_max are the
extremes of exp(f_l(x'_{l,k}) · f_i(x_{i,j}) / (τM/B)) over l and j.
The derivation applies the reverse Hölder inequality with M sequences of
B terms, so the bound is only guaranteed when M <= B.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from centrolab.config import (
    NORM_EPS,
    THEOREM1_BATCH_SIZES,
    THEOREM1_MODALITIES,
    THEOREM1_TAUS,
    THEOREM1_TOLERANCE,
    UNIT_NORM_TOLERANCE,
)
from centrolab.errors import DataError, ShapeError
from centrolab.guardrails.data_validator import array_validator
from centrolab.losses.infonce import info_nce
from centrolab.models.schemas import TheoryRow

logger = logging.getLogger(__name__)


def _unit(x: np.ndarray) -> np.ndarray:
    return x / np.maximum(np.linalg.norm(x, axis=-1, keepdims=True), NORM_EPS)


@dataclass(frozen=True)
class BoundInstance:
    """
    One batch for the bound.

    Attributes:
        embeddings: (M, B, d) unit-norm f_l(x_{l,j})
        augmented: (M, B, d) unit-norm f_l(x'_{l,j})
        tau: Temperature τ > 0
        target: 0-based modality i whose encoder is bounded
    """
    embeddings: np.ndarray
    augmented: np.ndarray
    tau: float
    target: int = 0

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        aug = np.asarray(self.augmented, dtype=np.float64)
        if emb.ndim != 3 or emb.shape != aug.shape:
            raise ShapeError(f"embeddings {emb.shape} and augmented {aug.shape} must share an (M, B, d) shape")
        array_validator.require_temperature(self.tau)
        if not 0 <= self.target < emb.shape[0]:
            raise DataError(f"target modality {self.target} outside 0..{emb.shape[0] - 1}")
        for name, arr in (("embeddings", emb), ("augmented", aug)):
            array_validator.require_finite(arr, name)
            if np.max(np.abs(np.linalg.norm(arr, axis=-1) - 1.0)) > UNIT_NORM_TOLERANCE:
                raise DataError(f"{name} must be unit-norm")
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "augmented", aug)

    @property
    def n_modalities(self) -> int:
        return self.embeddings.shape[0]

    @property
    def batch_size(self) -> int:
        return self.embeddings.shape[1]

    @property
    def anchors(self) -> np.ndarray:
        """(B, d) mean of the augmented embeddings, not renormalized."""
        return self.augmented.mean(axis=0)

    @property
    def pair_tau(self) -> float:
        """Temperature τM/B of the pairwise terms."""
        return self.tau * self.n_modalities / self.batch_size


@dataclass(frozen=True)
class BoundResult:
    lhs: float
    rhs: float
    log_constants: np.ndarray
    bound_applies: bool

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.slack >= -THEOREM1_TOLERANCE


def log_c_constants(instance: BoundInstance) -> np.ndarray:
    """
    log C_k for every k in the batch.

    With Δ = (s_max - s_min) / τ', log C = 2 log(1 + e^Δ) - log 4 - Δ.
    """
    target = instance.embeddings[instance.target]
    # scores[l, k, j] = f_l(x'_{l,k}) · f_i(x_{i,j})
    scores = np.einsum("lkd,jd->lkj", instance.augmented, target)
    spread = (scores.max(axis=(0, 2)) - scores.min(axis=(0, 2))) / instance.pair_tau
    return 2.0 * np.logaddexp(0.0, spread) - np.log(4.0) - spread


def theorem1_slack(instance: BoundInstance) -> BoundResult:
    """
    Evaluate both sides of the bound.

    Returns:
        BoundResult with lhs, rhs, per-k log C and whether M <= B
    """
    target = instance.embeddings[instance.target]
    lhs = instance.batch_size * info_nce(instance.anchors, target, instance.tau).value
    pairwise = sum(
        info_nce(instance.augmented[l], target, instance.pair_tau).value
        for l in range(instance.n_modalities)
    )
    log_c = log_c_constants(instance)
    rhs = float(pairwise - log_c.sum())
    return BoundResult(
        lhs=float(lhs),
        rhs=rhs,
        log_constants=log_c,
        bound_applies=instance.n_modalities <= instance.batch_size,
    )


def random_instance(
    rng: np.random.Generator,
    n_modalities: int,
    batch_size: int,
    tau: float,
    dim: int = 4,
    target: Optional[int] = None,
    view_noise: float = 0.5,
) -> BoundInstance:
    """Random unit embeddings; augmented views are noisy copies renormalized."""
    emb = _unit(rng.standard_normal((n_modalities, batch_size, dim)))
    aug = _unit(emb + view_noise * rng.standard_normal(emb.shape))
    if target is None:
        target = int(rng.integers(n_modalities))
    return BoundInstance(emb, aug, tau, target)


def tightness_sweep(instance: BoundInstance, steps: int = 11) -> np.ndarray:
    """
    Slack while every embedding is pulled toward one common unit vector.

    Step t in [0, 1] replaces each vector v by unit((1 - t) v + t u), where u
    is the normalized mean of all embeddings of the instance.

    Returns:
        (steps, 2) array of (t, slack)
    """
    if steps < 2:
        raise DataError("tightness sweep needs at least two steps")
    pooled = np.concatenate([instance.embeddings, instance.augmented]).reshape(-1, instance.embeddings.shape[-1])
    common = _unit(pooled.mean(axis=0))

    out = np.zeros((steps, 2))
    for s, t in enumerate(np.linspace(0.0, 1.0, steps)):
        moved = BoundInstance(
            _unit((1.0 - t) * instance.embeddings + t * common),
            _unit((1.0 - t) * instance.augmented + t * common),
            instance.tau,
            instance.target,
        )
        out[s] = (t, theorem1_slack(moved).slack)
    return out


def theorem1_sweep(
    rng: np.random.Generator,
    n_instances: int = 100,
    modalities: Sequence[int] = THEOREM1_MODALITIES,
    batch_sizes: Sequence[int] = THEOREM1_BATCH_SIZES,
    taus: Sequence[float] = THEOREM1_TAUS,
    dim: int = 4,
) -> List[TheoryRow]:
    """
    Randomized instances over the (M, B, τ) grid restricted to M <= B.

    Returns:
        One TheoryRow per instance
    """
    grid = [(m, b) for m in modalities for b in batch_sizes if m <= b]
    if not grid:
        raise DataError("no (M, B) combination with M <= B in the sweep grid")

    rows = []
    for instance in range(n_instances):
        m, b = grid[int(rng.integers(len(grid)))]
        tau = float(taus[int(rng.integers(len(taus)))])
        result = theorem1_slack(random_instance(rng, m, b, tau, dim=dim))
        rows.append(
            TheoryRow(
                check="theorem1",
                instance=instance,
                params={"M": m, "B": b, "tau": tau},
                lhs=result.lhs,
                rhs=result.rhs,
                slack=result.slack,
                passed=result.holds,
            )
        )
    failed = sum(not r.passed for r in rows)
    logger.info(f"Anchor bound: {n_instances - failed}/{n_instances} instances hold")
    return rows
