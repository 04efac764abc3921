"""
Per-modality nonlinear projections of the latent space.

Modality i observes x = Θ2 · sigmoid(Θ1 · z) + noise, where a chosen set of
Θ1 columns is zeroed so that the modality only sees part of z.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.special import expit

from centrolab.config import MAX_THETA2_CONDITION, ZERO_FRACTION_HIGH, ZERO_FRACTION_LOW
from centrolab.errors import ConfigError
from centrolab.guardrails.data_validator import array_validator

logger = logging.getLogger(__name__)


@dataclass
class ModalityProjector:
    """
    Projection g_i for one modality.

    Attributes:
        theta1: (d_x, d_z) matrix, columns listed in zero_columns are all zero
        theta2: (d_x, d_x) mixing matrix
        zero_columns: Sorted indices of the zeroed Θ1 columns
        zero_col_fraction: Requested fraction of zeroed columns
    """
    theta1: np.ndarray
    theta2: np.ndarray
    zero_columns: np.ndarray
    zero_col_fraction: float

    @property
    def d_x(self) -> int:
        return self.theta1.shape[0]

    @property
    def d_z(self) -> int:
        return self.theta1.shape[1]

    def transform(self, latents: np.ndarray) -> np.ndarray:
        """Noise-free g_i(z) for every row of `latents`."""
        array_validator.require_matrix(latents, "latents", cols=self.d_z)
        return expit(latents @ self.theta1.T) @ self.theta2.T


def zero_column_count(fraction: float, d_z: int) -> int:
    """Nearest-integer count of zero columns, ties rounded up."""
    return int(math.floor(fraction * d_z + 0.5 + 1e-9))


def zero_fraction_schedule(
    n_modalities: int,
    high: float = ZERO_FRACTION_HIGH,
    low: float = ZERO_FRACTION_LOW,
) -> List[float]:
    """Linear schedule from the worst modality (high) to the best (low)."""
    if n_modalities == 1:
        return [low]
    return np.linspace(high, low, n_modalities).tolist()


def fractions_from_qualities(qualities: Sequence[float]) -> List[float]:
    """Map modality quality in [0, 1] to a zero-column fraction (1 - quality)."""
    out = []
    for q in qualities:
        if not 0.0 <= q <= 1.0:
            raise ConfigError(f"modality quality must lie in [0, 1], got {q}")
        out.append(1.0 - float(q))
    return out


def make_projectors(
    n_modalities: int,
    d_x: int,
    d_z: int,
    fractions: Sequence[float],
    rng: np.random.Generator,
) -> List[ModalityProjector]:
    """
    Draw one projector per modality.

    Args:
        n_modalities: Number of modalities M
        d_x: Observation dimension
        d_z: Latent dimension
        fractions: Per-modality zero-column fraction, nonincreasing in i
        rng: Random generator

    Returns:
        List of M ModalityProjector

    Raises:
        ConfigError: On a fraction outside [0, 1], an increasing schedule or a length mismatch
    """
    if len(fractions) != n_modalities:
        raise ConfigError(f"{len(fractions)} zero-column fractions for {n_modalities} modalities")

    for i, f in enumerate(fractions):
        if not 0.0 <= f <= 1.0:
            raise ConfigError(f"zero-column fraction for modality {i + 1} is {f}, outside [0, 1]")
    for i in range(1, n_modalities):
        if fractions[i] > fractions[i - 1] + 1e-12:
            raise ConfigError(
                f"zero-column fractions must not increase with modality index "
                f"(modality {i} has {fractions[i - 1]}, modality {i + 1} has {fractions[i]})"
            )

    projectors = []
    for i, fraction in enumerate(fractions):
        theta1 = rng.standard_normal((d_x, d_z))
        zero_columns = np.sort(rng.choice(d_z, size=zero_column_count(fraction, d_z), replace=False))
        theta1[:, zero_columns] = 0.0

        theta2 = rng.standard_normal((d_x, d_x))
        while np.linalg.cond(theta2) > MAX_THETA2_CONDITION:
            logger.warning(f"Regenerating ill-conditioned Θ2 for modality {i + 1}")
            theta2 = rng.standard_normal((d_x, d_x))

        projectors.append(
            ModalityProjector(
                theta1=theta1,
                theta2=theta2,
                zero_columns=zero_columns,
                zero_col_fraction=float(fraction),
            )
        )
    return projectors


def project_modality(
    proj: ModalityProjector,
    latents: np.ndarray,
    rng: np.random.Generator,
    noise_scale: float,
) -> np.ndarray:
    """
    Observe latents through one modality.

    Args:
        proj: Modality projector
        latents: (n, d_z) latent matrix
        rng: Random generator for the observation noise
        noise_scale: Standard deviation of the isotropic Gaussian noise

    Returns:
        (n, d_x) observations
    """
    clean = proj.transform(latents)
    if noise_scale == 0:
        return clean
    return clean + noise_scale * rng.standard_normal(clean.shape)
