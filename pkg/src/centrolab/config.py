"""
Configuration module for centrolab.

This module handles:
- Environment variables loading
- Process-wide settings (logging, workers, output location)
- Experiment constants shared by the numeric modules
"""

from typing import List, Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="CENTROLAB_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: str = "INFO"

    # Execution
    threads: int = 1
    output_dir: str = "./runs"

    # Seeds
    default_seeds: List[int] = [11, 12, 13, 14, 15]
    theory_seed: int = 2024

    # Tracking (file store under the run directory when no URI is set)
    mlflow_tracking: bool = True
    mlflow_tracking_uri: Optional[str] = None


# Global settings instance
settings = Settings()


# Synthetic data defaults
DEFAULT_D_X = 16
DEFAULT_D_Z = 8
DEFAULT_K = 50
DEFAULT_NOISE_SCALE = 1.0
GMM_MEAN_SPREAD = 3.0

# Zero-column schedule endpoints (worst and best modality)
ZERO_FRACTION_HIGH = 0.6
ZERO_FRACTION_LOW = 0.1

# Projector regeneration threshold
MAX_THETA2_CONDITION = 1e8

# Split names, in tag order
SPLIT_NAMES = ("train", "val", "test")

# Encoder defaults
DEFAULT_HIDDEN = [64, 64]
DEFAULT_EMBED_DIM = 16
NORM_EPS = 1e-12

# Training defaults
DEFAULT_TAU = 0.3
DEFAULT_EPOCHS = 100
DEFAULT_BATCH_SIZE = 256
DEFAULT_LR = 1e-3

# Probe defaults
PROBE_HIDDEN = 128
PROBE_EPOCHS = 200
PROBE_LR = 1e-3
PROBE_BATCH_SIZE = 256

# Retrieval ranks
RETRIEVAL_KS = (1, 5, 10)

# Methods accepted in experiment configs (fabind takes a 1-based anchor suffix)
BINDING_METHODS = [
    "none",
    "fabind",
    "centrobind",
    "wavg",
    "random",
    "random-intra",
    "median",
]

ANCHOR_FLAGS = ["centroid", "wavg", "random", "random-intra", "median"]

BACKBONES = ["random", "pretrained"]

# Theory tolerances
THEOREM1_TOLERANCE = 1e-9
HOLDER_TOLERANCE = 1e-12
PROPOSITION_TOLERANCE = 1e-10
MAX_ENUMERATED_MAPS = 4 ** 4

# Theory sweep grids
THEOREM1_MODALITIES = (2, 3, 4)
THEOREM1_BATCH_SIZES = (2, 4, 8)
THEOREM1_TAUS = (0.1, 0.3, 1.0)
PMF_TOLERANCE = 1e-12
UNIT_NORM_TOLERANCE = 1e-9
