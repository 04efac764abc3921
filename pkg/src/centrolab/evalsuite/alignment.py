"""
Intra and shared similarity of an encoder set.

intra X_i: mean cosine between f_i(x) and f_i(x') over held-out pairs
shared X_i-X_l: mean cosine between f_i(x_{i,j}) and f_l(x_{l,j})
"""

from itertools import combinations
from typing import Dict

import numpy as np

from centrolab.binder.encoders import EncoderSet
from centrolab.config import NORM_EPS
from centrolab.synthgen.dataset import MultiModalDataset, augment_batch


def _cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.maximum(np.linalg.norm(a, axis=1), NORM_EPS)
    nb = np.maximum(np.linalg.norm(b, axis=1), NORM_EPS)
    return np.sum(a * b, axis=1) / (na * nb)


def alignment_stats(
    encoders: EncoderSet,
    dataset: MultiModalDataset,
    split: str,
    rng: np.random.Generator,
) -> Dict[str, float]:
    """
    Mean intra and shared cosine similarities on one split.

    Returns:
        Dict with keys 'intra:X<i>' and 'shared:X<i>-X<l>' (1-based, i < l)
    """
    rows = dataset.indices(split)
    clean = [encoders.embed(i, dataset.modalities[i][rows]) for i in range(encoders.n_modalities)]

    stats = {}
    for i in range(encoders.n_modalities):
        augmented = encoders.embed(i, augment_batch(dataset, i, rows, rng))
        stats[f"intra:X{i + 1}"] = float(np.mean(_cosine(clean[i], augmented)))
    for i, l in combinations(range(encoders.n_modalities), 2):
        stats[f"shared:X{i + 1}-X{l + 1}"] = float(np.mean(_cosine(clean[i], clean[l])))
    return stats
