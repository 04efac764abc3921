"""
Embedding export for external visualization tools.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from centrolab.binder.encoders import EncoderSet
from centrolab.synthgen.dataset import MultiModalDataset

logger = logging.getLogger(__name__)


def embedding_columns(embed_dim: int) -> list:
    return ["pair_id", "modality", "label"] + [f"dim_{c}" for c in range(embed_dim)]


def export_embeddings(
    encoders: EncoderSet,
    dataset: MultiModalDataset,
    path: Union[str, Path],
    split: Optional[str] = None,
) -> Path:
    """
    Write one CSV row per (pair, modality): pair_id,modality,label,dim_0..dim_{d-1}.

    Floats use 17 significant digits so parsing the file back reproduces the
    embeddings bit for bit. Modalities are numbered from 1.

    Args:
        encoders: Encoder set
        dataset: Dataset to embed
        path: Output CSV path
        split: Restrict to one split; all pairs when omitted

    Returns:
        Path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    rows = np.arange(dataset.n_pairs) if split is None else dataset.indices(split)
    frames = []
    for i in range(encoders.n_modalities):
        if rows.size == 0:
            break
        emb = encoders.embed(i, dataset.modalities[i][rows])
        frame = pd.DataFrame(emb, columns=[f"dim_{c}" for c in range(encoders.embed_dim)])
        frame.insert(0, "label", dataset.labels[rows])
        frame.insert(0, "modality", i + 1)
        frame.insert(0, "pair_id", rows)
        frames.append(frame)

    if frames:
        table = pd.concat(frames, ignore_index=True)
    else:
        table = pd.DataFrame(columns=embedding_columns(encoders.embed_dim))

    table.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Exported {len(table)} embedding rows to {path}")
    return path


def read_embeddings(path: Union[str, Path]) -> pd.DataFrame:
    """Parse an export file back (round-trip counterpart of export_embeddings)."""
    return pd.read_csv(path, float_precision="round_trip")
