"""
Reverse Hölder inequality checks.

For M sequences of n positive numbers bounded by [c_m, c_M]:

    Π_i (Σ_j x_ij)^(1/n)  <=  (c_m + c_M)^2 / (4 c_m c_M) · Σ_j (Π_i x_ij)^(1/n)

Both sides are evaluated in the log domain. The inequality is guaranteed
for M <= n; instances with more sequences than terms can violate it.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.special import logsumexp

from centrolab.config import HOLDER_TOLERANCE
from centrolab.errors import DataError
from centrolab.guardrails.data_validator import array_validator
from centrolab.models.schemas import TheoryRow

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HolderResult:
    log_lhs: float
    log_rhs: float
    log_constant: float
    holds: bool

    @property
    def lhs(self) -> float:
        return float(np.exp(self.log_lhs))

    @property
    def rhs(self) -> float:
        return float(np.exp(self.log_rhs))


def log_holder_constant(c_min: float, c_max: float) -> float:
    """log((c_m + c_M)^2 / (4 c_m c_M)), which is 0 when c_m = c_M."""
    return float(2.0 * np.logaddexp(np.log(c_min), np.log(c_max)) - np.log(4.0) - np.log(c_min) - np.log(c_max))


def reverse_holder_check(
    x: np.ndarray,
    c_min: Optional[float] = None,
    c_max: Optional[float] = None,
    tolerance: float = HOLDER_TOLERANCE,
) -> HolderResult:
    """
    Evaluate both sides of the reverse Hölder inequality.

    Args:
        x: (M, n) strictly positive entries, one sequence per row
        c_min: Lower bound of the entries; the smallest entry when omitted
        c_max: Upper bound of the entries; the largest entry when omitted
        tolerance: Allowed excess of log lhs over log rhs

    Returns:
        HolderResult with log-domain sides and the verdict

    Raises:
        DataError: On a nonpositive entry or entries outside [c_min, c_max]
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    array_validator.require_matrix(x, "Hölder sequences")
    if x.size == 0:
        raise DataError("Hölder check needs at least one entry")
    if np.any(x <= 0):
        raise DataError("Hölder sequences must be strictly positive")

    c_min = float(x.min()) if c_min is None else float(c_min)
    c_max = float(x.max()) if c_max is None else float(c_max)
    if not 0 < c_min <= c_max:
        raise DataError(f"need 0 < c_min <= c_max, got {c_min}, {c_max}")
    if x.min() < c_min or x.max() > c_max:
        raise DataError(f"entries span [{x.min()}, {x.max()}], outside [{c_min}, {c_max}]")

    n = x.shape[1]
    logs = np.log(x)
    log_lhs = float(np.sum(logsumexp(logs, axis=1)) / n)
    log_c = log_holder_constant(c_min, c_max)
    log_rhs = float(log_c + logsumexp(logs.sum(axis=0) / n))
    return HolderResult(log_lhs, log_rhs, log_c, log_lhs <= log_rhs + tolerance)


def random_holder_instance(
    rng: np.random.Generator,
    n_sequences: int,
    length: int,
    low: float = 0.1,
    high: float = 10.0,
) -> np.ndarray:
    """Entries drawn log-uniformly from [low, high]."""
    return np.exp(rng.uniform(np.log(low), np.log(high), size=(n_sequences, length)))


def holder_sweep(
    rng: np.random.Generator,
    n_instances: int = 1000,
    max_sequences: int = 4,
    max_length: int = 8,
) -> List[TheoryRow]:
    """Randomized instances with 1 <= M <= n; one TheoryRow each."""
    rows = []
    for instance in range(n_instances):
        length = int(rng.integers(1, max_length + 1))
        n_seq = int(rng.integers(1, min(max_sequences, length) + 1))
        result = reverse_holder_check(random_holder_instance(rng, n_seq, length))
        rows.append(
            TheoryRow(
                check="reverse_holder",
                instance=instance,
                params={"M": n_seq, "n": length},
                lhs=result.log_lhs,
                rhs=result.log_rhs,
                slack=result.log_rhs - result.log_lhs,
                passed=result.holds,
            )
        )
    failed = sum(not r.passed for r in rows)
    logger.info(f"Reverse Hölder: {n_instances - failed}/{n_instances} instances hold")
    return rows
