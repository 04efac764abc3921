"""
Array validation guardrail.

This module validates numeric inputs against the contracts of the
numeric modules (finite entries, matrix shapes, probability vectors)
before any computation touches them.
"""

from typing import Optional, Tuple

import numpy as np

from centrolab.errors import ConfigError, DataError, NumericError, ShapeError


class ArrayValidator:
    """
    Validates arrays passed between numkit, losses, anchors and theory.

    The check_* methods return (is_valid, message) tuples; the require_*
    methods raise the matching centrolab error when a check fails.
    """

    def __init__(self, pmf_tolerance: float = 1e-9):
        """
        Initialize the array validator.

        Args:
            pmf_tolerance: Allowed deviation of a probability vector's sum from 1
        """
        self.pmf_tolerance = pmf_tolerance

    def check_matrix(
        self,
        array: np.ndarray,
        cols: Optional[int] = None,
        rows: Optional[int] = None,
    ) -> Tuple[bool, str]:
        """
        Validate a 2-D matrix and optionally its dimensions.

        Args:
            array: Candidate matrix
            cols: Expected column count, if any
            rows: Expected row count, if any

        Returns:
            Tuple of (is_valid, message)
        """
        if not isinstance(array, np.ndarray):
            return False, f"expected numpy array, got {type(array).__name__}"

        if array.ndim != 2:
            return False, f"expected a 2-D matrix, got {array.ndim} dimension(s)"

        if cols is not None and array.shape[1] != cols:
            return False, f"expected {cols} columns, got {array.shape[1]}"

        if rows is not None and array.shape[0] != rows:
            return False, f"expected {rows} rows, got {array.shape[0]}"

        return True, "matrix validated"

    def check_finite(self, array: np.ndarray) -> Tuple[bool, str]:
        """
        Validate that every entry is finite.

        Args:
            array: Array to inspect

        Returns:
            Tuple of (is_valid, message)
        """
        bad = int(np.size(array) - np.count_nonzero(np.isfinite(array)))
        if bad:
            return False, f"{bad} non-finite entr{'y' if bad == 1 else 'ies'}"
        return True, "all entries finite"

    def check_probability_vector(self, prior: np.ndarray) -> Tuple[bool, str]:
        """
        Validate a probability vector.

        Args:
            prior: Candidate probability vector

        Returns:
            Tuple of (is_valid, message)
        """
        prior = np.asarray(prior, dtype=np.float64)

        if prior.ndim != 1 or prior.size == 0:
            return False, "probability vector must be 1-D and non-empty"

        if not np.all(np.isfinite(prior)):
            return False, "probability vector has non-finite entries"

        if np.any(prior < 0):
            return False, "probability vector has negative entries"

        total = float(prior.sum())
        if abs(total - 1.0) > self.pmf_tolerance:
            return False, f"probability vector sums to {total:.12g}, not 1"

        return True, "probability vector validated"

    def require_matrix(
        self,
        array: np.ndarray,
        name: str,
        cols: Optional[int] = None,
        rows: Optional[int] = None,
    ) -> np.ndarray:
        """Raise ShapeError unless `array` is a matrix of the requested shape."""
        is_valid, msg = self.check_matrix(array, cols=cols, rows=rows)
        if not is_valid:
            raise ShapeError(f"{name}: {msg}")
        return array

    def require_finite(self, array: np.ndarray, name: str) -> np.ndarray:
        """Raise NumericError when `array` holds NaN or infinite entries."""
        is_valid, msg = self.check_finite(array)
        if not is_valid:
            raise NumericError(f"{name}: {msg}")
        return array

    def require_probability_vector(self, prior: np.ndarray, name: str) -> np.ndarray:
        """Raise ConfigError when `prior` is not a probability vector."""
        is_valid, msg = self.check_probability_vector(prior)
        if not is_valid:
            raise ConfigError(f"{name}: {msg}")
        return np.asarray(prior, dtype=np.float64)

    def require_temperature(self, tau: float) -> float:
        """Raise ConfigError unless tau is a positive finite number."""
        if not np.isfinite(tau) or tau <= 0:
            raise ConfigError(f"temperature must be positive, got {tau}")
        return float(tau)

    def require_nonempty_rows(self, mask: np.ndarray, name: str) -> None:
        """Raise DataError when a row of a boolean mask selects nothing."""
        empty = np.flatnonzero(~mask.any(axis=1))
        if empty.size:
            raise DataError(
                f"{name}: {empty.size} row(s) with no available entry, first at index {int(empty[0])}"
            )


# Global instance for easy import
array_validator = ArrayValidator()
