"""
Zero-shot cross-modal retrieval.

Queries and gallery items are paired by row index. Items are ranked by
cosine similarity; ties go to the lower gallery index.
"""

from typing import Dict, Sequence

import numpy as np

from centrolab.config import NORM_EPS
from centrolab.errors import DataError
from centrolab.guardrails.data_validator import array_validator


def _unit_rows(x: np.ndarray) -> np.ndarray:
    return x / np.maximum(np.linalg.norm(x, axis=1, keepdims=True), NORM_EPS)


def true_pair_ranks(query: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    """
    0-based rank of each query's own pair in its gallery ordering.

    Rank counts gallery items scoring strictly higher, plus equal-scoring
    items with a lower index.
    """
    array_validator.require_matrix(query, "retrieval queries")
    array_validator.require_matrix(gallery, "retrieval gallery", cols=query.shape[1], rows=query.shape[0])

    scores = _unit_rows(query) @ _unit_rows(gallery).T
    own = np.diag(scores)[:, None]
    higher = (scores > own).sum(axis=1)
    index = np.arange(scores.shape[1])
    tied_before = ((scores == own) & (index[None, :] < index[:, None])).sum(axis=1)
    return higher + tied_before


def _top_k(ranks: np.ndarray, k: int, gallery_size: int) -> float:
    if k < 1 or k > gallery_size:
        raise DataError(f"k={k} outside 1..{gallery_size} (gallery size)")
    return float(np.mean(ranks < k))


def retrieve_one_to_one(query: np.ndarray, gallery: np.ndarray, k: int) -> float:
    """
    Top-k accuracy of retrieving gallery item j from query j.

    Args:
        query: (N, d) embeddings of the query modality
        gallery: (N, d) embeddings of the gallery modality
        k: Rank cut-off

    Returns:
        Fraction of queries whose pair ranks within the top k

    Raises:
        DataError: If k exceeds the gallery size
    """
    return _top_k(true_pair_ranks(query, gallery), k, gallery.shape[0])


def retrieve_two_to_one(
    query_a: np.ndarray,
    query_b: np.ndarray,
    gallery: np.ndarray,
    k: int,
) -> float:
    """Top-k accuracy when the query is the mean of two modality embeddings."""
    array_validator.require_matrix(query_b, "second query", cols=query_a.shape[1], rows=query_a.shape[0])
    return retrieve_one_to_one(0.5 * (query_a + query_b), gallery, k)


def retrieval_table(query: np.ndarray, gallery: np.ndarray, ks: Sequence[int]) -> Dict[int, float]:
    """Top-k accuracies for several k from a single ranking."""
    ranks = true_pair_ranks(query, gallery)
    return {int(k): _top_k(ranks, k, gallery.shape[0]) for k in ks}
