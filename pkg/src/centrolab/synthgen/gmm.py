"""
Gaussian-mixture latent model.

Labels are mixture component ids; latents are drawn from the component's
diagonal Gaussian.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from centrolab.config import DEFAULT_D_Z, DEFAULT_K, GMM_MEAN_SPREAD
from centrolab.errors import ConfigError, DataError
from centrolab.guardrails.data_validator import array_validator


@dataclass
class GmmConfig:
    """
    Parameters of a K-component mixture over R^{d_z}.

    Attributes:
        prior: (K,) component probabilities
        means: (K, d_z) component means
        cov_diag: (K, d_z) positive diagonal covariances
        seed: Seed the means were drawn with, if generated
    """
    prior: np.ndarray
    means: np.ndarray
    cov_diag: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        self.prior = array_validator.require_probability_vector(self.prior, "GMM prior")
        self.means = np.asarray(self.means, dtype=np.float64)
        self.cov_diag = np.asarray(self.cov_diag, dtype=np.float64)

        k = self.prior.size
        if self.means.ndim != 2 or self.means.shape[0] != k:
            raise ConfigError(f"GMM means must be ({k}, d_z), got {self.means.shape}")
        if self.cov_diag.shape != self.means.shape:
            raise ConfigError(f"GMM covariance diagonals {self.cov_diag.shape} do not match means {self.means.shape}")
        if np.any(self.cov_diag <= 0):
            raise ConfigError("GMM covariance diagonals must be positive")

    @property
    def n_components(self) -> int:
        return self.prior.size

    @property
    def d_z(self) -> int:
        return self.means.shape[1]

    @classmethod
    def default(
        cls,
        rng: np.random.Generator,
        n_components: int = DEFAULT_K,
        d_z: int = DEFAULT_D_Z,
        spread: float = GMM_MEAN_SPREAD,
        seed: Optional[int] = None,
    ) -> "GmmConfig":
        """Uniform prior, means ~ N(0, spread^2 I), identity covariances."""
        if n_components < 1 or d_z < 1:
            raise ConfigError(f"need K >= 1 and d_z >= 1, got K={n_components}, d_z={d_z}")
        return cls(
            prior=np.full(n_components, 1.0 / n_components),
            means=rng.standard_normal((n_components, d_z)) * spread,
            cov_diag=np.ones((n_components, d_z)),
            seed=seed,
        )

    def to_dict(self) -> dict:
        return {
            "prior": self.prior.tolist(),
            "means": self.means.tolist(),
            "cov_diag": self.cov_diag.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GmmConfig":
        return cls(
            prior=np.asarray(data["prior"]),
            means=np.asarray(data["means"]),
            cov_diag=np.asarray(data["cov_diag"]),
            seed=data.get("seed"),
        )


def sample_latent(cfg: GmmConfig, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw labels from the prior and latents from the labelled component.

    Args:
        cfg: Mixture parameters
        n: Number of samples
        rng: Random generator

    Returns:
        Tuple of (latents (n, d_z), labels (n,) int64)
    """
    if n < 1:
        raise DataError(f"need at least one sample, got n={n}")

    labels = rng.choice(cfg.n_components, size=n, p=cfg.prior).astype(np.int64)
    noise = rng.standard_normal((n, cfg.d_z))
    latents = cfg.means[labels] + noise * np.sqrt(cfg.cov_diag[labels])
    return latents, labels
