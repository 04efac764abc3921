"""
Per-modality encoder sets.

All encoders map into the same embedding space; each one carries a
trainable flag that the training loops respect.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from centrolab.errors import ShapeError
from centrolab.numkit.checkpoint import load_mlp, save_mlp
from centrolab.numkit.mlp import MlpParams, init_mlp, mlp_forward


@dataclass
class EncoderSet:
    """
    Encoders f_1..f_M with per-encoder trainable flags.

    Invariant: every encoder has the same output dimension.
    """
    encoders: List[MlpParams]
    trainable: List[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.trainable:
            self.trainable = [True] * len(self.encoders)
        if len(self.trainable) != len(self.encoders):
            raise ShapeError(f"{len(self.trainable)} trainable flags for {len(self.encoders)} encoders")
        dims = {e.output_dim for e in self.encoders}
        if len(dims) > 1:
            raise ShapeError(f"encoders disagree on the embedding dimension: {sorted(dims)}")

    @property
    def n_modalities(self) -> int:
        return len(self.encoders)

    @property
    def embed_dim(self) -> int:
        return self.encoders[0].output_dim

    def embed(self, modality: int, inputs: np.ndarray) -> np.ndarray:
        return mlp_forward(self.encoders[modality], inputs)

    def copy(self) -> "EncoderSet":
        return EncoderSet([e.copy() for e in self.encoders], list(self.trainable))

    def frozen(self, *modalities: int) -> "EncoderSet":
        """Copy with the given modalities marked non-trainable."""
        out = self.copy()
        for i in modalities:
            out.trainable[i] = False
        return out

    def checksums(self) -> List[str]:
        return [e.checksum() for e in self.encoders]


def init_encoder_set(
    n_modalities: int,
    input_dim: int,
    hidden: Sequence[int],
    embed_dim: int,
    rng: np.random.Generator,
) -> EncoderSet:
    """Randomly initialized encoders input_dim -> hidden... -> embed_dim."""
    dims = [input_dim, *hidden, embed_dim]
    return EncoderSet([init_mlp(dims, rng) for _ in range(n_modalities)])


def save_encoder_set(encoders: EncoderSet, out_dir: Union[str, Path]) -> Path:
    """Write encoder_<i>.ckpt (1-based) and encoders.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, params in enumerate(encoders.encoders, start=1):
        save_mlp(params, out_dir / f"encoder_{i}.ckpt")
    (out_dir / "encoders.json").write_text(
        json.dumps(
            {
                "n_modalities": encoders.n_modalities,
                "trainable": encoders.trainable,
                "checksums": encoders.checksums(),
            },
            indent=1,
        )
    )
    return out_dir


def load_encoder_set(in_dir: Union[str, Path]) -> EncoderSet:
    in_dir = Path(in_dir)
    meta = json.loads((in_dir / "encoders.json").read_text())
    encoders = [load_mlp(in_dir / f"encoder_{i}.ckpt") for i in range(1, meta["n_modalities"] + 1)]
    return EncoderSet(encoders, list(meta["trainable"]))
