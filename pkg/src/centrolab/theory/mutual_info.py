"""
Exact information quantities of small discrete joints (natural log).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import entropy as scipy_entropy

from centrolab.config import PMF_TOLERANCE
from centrolab.errors import DataError
from centrolab.guardrails.data_validator import ArrayValidator

pmf_validator = ArrayValidator(pmf_tolerance=PMF_TOLERANCE)


@dataclass(frozen=True)
class DiscreteJoint:
    """
    Joint pmf P[x, y] over two finite alphabets.

    Invariant: entries are nonnegative and sum to 1 within 1e-12.
    """
    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if pmf.ndim != 2 or pmf.size == 0:
            raise DataError(f"joint pmf must be a non-empty 2-D table, got shape {pmf.shape}")
        is_valid, msg = pmf_validator.check_probability_vector(pmf.ravel())
        if not is_valid:
            raise DataError(f"joint pmf: {msg}")
        object.__setattr__(self, "pmf", pmf)

    @property
    def shape(self):
        return self.pmf.shape

    @property
    def marginal_x(self) -> np.ndarray:
        return self.pmf.sum(axis=1)

    @property
    def marginal_y(self) -> np.ndarray:
        return self.pmf.sum(axis=0)

    def transposed(self) -> "DiscreteJoint":
        return DiscreteJoint(self.pmf.T.copy())


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.sum() <= 0:
        return 0.0
    return float(scipy_entropy(p))


def exact_mi(joint: DiscreteJoint) -> float:
    """
    I(X; Y) = Σ p(x,y) log(p(x,y) / (p(x) p(y))) in nats.

    Zero-probability cells contribute nothing. Round-off below zero is
    clipped so the result is never negative.
    """
    p = joint.pmf
    outer = np.outer(joint.marginal_x, joint.marginal_y)
    support = p > 0
    mi = float(np.sum(p[support] * (np.log(p[support]) - np.log(outer[support]))))
    return max(mi, 0.0)


def self_information(marginal: np.ndarray) -> DiscreteJoint:
    """Joint of (X, X): the diagonal table of a marginal."""
    return DiscreteJoint(np.diag(np.asarray(marginal, dtype=np.float64)))


def _one_hot(mapping: Sequence[int], codomain: int) -> np.ndarray:
    mapping = np.asarray(mapping, dtype=np.int64)
    if mapping.size and (mapping.min() < 0 or mapping.max() >= codomain):
        raise DataError(f"map {mapping.tolist()} leaves the codomain 0..{codomain - 1}")
    table = np.zeros((mapping.size, codomain))
    table[np.arange(mapping.size), mapping] = 1.0
    return table


def pushforward(
    joint: DiscreteJoint,
    map_x: Optional[Sequence[int]] = None,
    map_y: Optional[Sequence[int]] = None,
    codomain_x: Optional[int] = None,
    codomain_y: Optional[int] = None,
) -> DiscreteJoint:
    """
    Joint of (f(X), g(Y)) for deterministic maps given as lookup tables.

    A missing map is the identity. Codomain sizes default to the largest
    image plus one.
    """
    nx, ny = joint.shape
    map_x = np.arange(nx) if map_x is None else np.asarray(map_x)
    map_y = np.arange(ny) if map_y is None else np.asarray(map_y)
    if map_x.size != nx or map_y.size != ny:
        raise DataError(f"maps of length {map_x.size}, {map_y.size} for alphabets {nx}, {ny}")
    left = _one_hot(map_x, codomain_x or int(map_x.max()) + 1)
    right = _one_hot(map_y, codomain_y or int(map_y.max()) + 1)
    return DiscreteJoint(left.T @ joint.pmf @ right)


def random_joint(
    rng: np.random.Generator,
    nx: int,
    ny: int,
    zero_fraction: float = 0.0,
) -> DiscreteJoint:
    """
    Dirichlet(1) joint, optionally with a share of cells forced to zero.

    At least one cell always keeps mass.
    """
    weights = rng.dirichlet(np.ones(nx * ny))
    if zero_fraction > 0:
        drop = rng.random(nx * ny) < zero_fraction
        drop[int(np.argmax(weights))] = False
        weights[drop] = 0.0
    return DiscreteJoint((weights / weights.sum()).reshape(nx, ny))
