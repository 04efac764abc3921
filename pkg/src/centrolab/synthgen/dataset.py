"""
Paired multi-modal datasets.

This module handles:
- Generating the synthetic M-modality dataset from one shared latent draw
- Fresh-noise augmentation of stored pairs
- Split selection and pairing-preserving shuffles
- Persistence (one .npy per modality plus a JSON sidecar)
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from centrolab.config import SPLIT_NAMES
from centrolab.errors import DataError, ShapeError, UnsupportedError
from centrolab.synthgen.gmm import GmmConfig, sample_latent
from centrolab.synthgen.projector import ModalityProjector, make_projectors, project_modality

logger = logging.getLogger(__name__)

SPLIT_CODES = {name: code for code, name in enumerate(SPLIT_NAMES)}


@dataclass
class MultiModalDataset:
    """
    M modalities observed on the same N latent draws.

    Row j of every modality matrix, of `labels` and of `latents` belongs to
    the same pair. `splits` holds one code per pair (0 train, 1 val, 2 test).
    """
    modalities: List[np.ndarray]
    labels: np.ndarray
    splits: np.ndarray
    latents: Optional[np.ndarray] = None
    projectors: Optional[List[ModalityProjector]] = None
    noise_scale: float = 1.0
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.labels.shape[0]
        for i, x in enumerate(self.modalities):
            if x.ndim != 2 or x.shape[0] != n:
                raise ShapeError(f"modality {i + 1} has shape {x.shape}, expected ({n}, d_x)")
        if self.splits.shape != (n,):
            raise ShapeError(f"split tags have shape {self.splits.shape}, expected ({n},)")
        if self.latents is not None and self.latents.shape[0] != n:
            raise ShapeError(f"latents have {self.latents.shape[0]} rows for {n} pairs")

    @property
    def n_modalities(self) -> int:
        return len(self.modalities)

    @property
    def n_pairs(self) -> int:
        return self.labels.shape[0]

    @property
    def n_classes(self) -> int:
        return int(self.meta.get("n_classes", int(self.labels.max()) + 1 if self.n_pairs else 0))

    def indices(self, split: str) -> np.ndarray:
        """Row indices of one split ('train', 'val' or 'test')."""
        if split not in SPLIT_CODES:
            raise DataError(f"unknown split '{split}', expected one of {list(SPLIT_CODES)}")
        return np.flatnonzero(self.splits == SPLIT_CODES[split])

    def subset(self, rows: np.ndarray) -> "MultiModalDataset":
        """Dataset restricted to `rows`, pairing kept."""
        return replace(
            self,
            modalities=[x[rows] for x in self.modalities],
            labels=self.labels[rows],
            splits=self.splits[rows],
            latents=None if self.latents is None else self.latents[rows],
        )

    def split(self, name: str) -> "MultiModalDataset":
        return self.subset(self.indices(name))

    def shuffled(self, rng: np.random.Generator) -> "MultiModalDataset":
        """Permute pairs; every modality is permuted with the same order."""
        return self.subset(rng.permutation(self.n_pairs))


def augment_batch(
    dataset: MultiModalDataset,
    modality: int,
    rows: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Fresh views g_i(z_j) + ε' for several pairs of one modality.

    Raises:
        UnsupportedError: If the dataset does not retain latents and projectors
    """
    if dataset.latents is None or dataset.projectors is None:
        raise UnsupportedError("augmentation needs the retained latents and projectors")
    if not 0 <= modality < dataset.n_modalities:
        raise DataError(f"modality index {modality} outside [0, {dataset.n_modalities})")
    return project_modality(
        dataset.projectors[modality],
        dataset.latents[rows],
        rng,
        dataset.noise_scale,
    )


def augment(
    dataset: MultiModalDataset,
    modality: int,
    pair: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Augmented sample x'_{i,j}: a new noisy view of the latent behind pair j.

    Args:
        dataset: Dataset with retained latents
        modality: 0-based modality index i
        pair: Pair index j
        rng: Random generator for the fresh noise

    Returns:
        (d_x,) vector
    """
    return augment_batch(dataset, modality, np.array([pair]), rng)[0]


def generate_dataset(
    n_modalities: int,
    gmm: GmmConfig,
    fractions: Sequence[float],
    n_train: int,
    n_val: int,
    n_test: int,
    noise_scale: float,
    rng: np.random.Generator,
    d_x: int = 16,
    seed: Optional[int] = None,
) -> MultiModalDataset:
    """
    Generate a paired, labelled and split synthetic dataset.

    Modality informativeness ascends with the index because the zero-column
    fractions are nonincreasing.

    Args:
        n_modalities: Number of modalities M
        gmm: Latent mixture
        fractions: Zero-column fraction per modality
        n_train: Pairs in the train split
        n_val: Pairs in the validation split
        n_test: Pairs in the test split
        noise_scale: Observation noise standard deviation
        rng: Random generator
        d_x: Observation dimension
        seed: Seed recorded in the metadata

    Returns:
        MultiModalDataset
    """
    n_total = n_train + n_val + n_test
    latents, labels = sample_latent(gmm, n_total, rng)
    projectors = make_projectors(n_modalities, d_x, gmm.d_z, fractions, rng)
    modalities = [project_modality(p, latents, rng, noise_scale) for p in projectors]
    splits = np.repeat(np.arange(3, dtype=np.int64), [n_train, n_val, n_test])

    logger.info(
        f"Generated dataset: M={n_modalities}, N={n_total}, d_x={d_x}, d_z={gmm.d_z}, "
        f"K={gmm.n_components}, zero columns={[len(p.zero_columns) for p in projectors]}"
    )

    return MultiModalDataset(
        modalities=modalities,
        labels=labels,
        splits=splits,
        latents=latents,
        projectors=projectors,
        noise_scale=float(noise_scale),
        meta={
            "seed": seed,
            "d_x": d_x,
            "d_z": gmm.d_z,
            "n_classes": gmm.n_components,
            "fractions": [float(f) for f in fractions],
            "noise_scale": float(noise_scale),
            "gmm": gmm.to_dict(),
        },
    )


def save_dataset(dataset: MultiModalDataset, out_dir: Union[str, Path]) -> Path:
    """
    Write modality_<i>.npy files, latents, projectors and dataset.json.

    Modality files are numbered from 1.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    for i, x in enumerate(dataset.modalities, start=1):
        np.save(out_dir / f"modality_{i}.npy", x.astype("<f8"))

    if dataset.latents is not None:
        np.save(out_dir / "latents.npy", dataset.latents.astype("<f8"))

    if dataset.projectors is not None:
        arrays = {}
        for i, p in enumerate(dataset.projectors, start=1):
            arrays[f"theta1_{i}"] = p.theta1
            arrays[f"theta2_{i}"] = p.theta2
            arrays[f"zero_columns_{i}"] = p.zero_columns
        np.savez(out_dir / "projectors.npz", **arrays)

    sidecar = dict(dataset.meta)
    sidecar.update(
        {
            "n_modalities": dataset.n_modalities,
            "n_pairs": dataset.n_pairs,
            "noise_scale": dataset.noise_scale,
            "labels": dataset.labels.tolist(),
            "splits": dataset.splits.tolist(),
        }
    )
    (out_dir / "dataset.json").write_text(json.dumps(sidecar, indent=1))
    return out_dir


def load_dataset(data_dir: Union[str, Path]) -> MultiModalDataset:
    """Read a directory written by save_dataset."""
    data_dir = Path(data_dir)
    sidecar_path = data_dir / "dataset.json"
    if not sidecar_path.exists():
        raise DataError(f"no dataset.json in {data_dir}")

    sidecar = json.loads(sidecar_path.read_text())
    n_modalities = int(sidecar.pop("n_modalities"))
    sidecar.pop("n_pairs", None)
    labels = np.asarray(sidecar.pop("labels"), dtype=np.int64)
    splits = np.asarray(sidecar.pop("splits"), dtype=np.int64)
    noise_scale = float(sidecar["noise_scale"])

    modalities = [np.load(data_dir / f"modality_{i}.npy") for i in range(1, n_modalities + 1)]

    latents = None
    if (data_dir / "latents.npy").exists():
        latents = np.load(data_dir / "latents.npy")

    projectors = None
    if (data_dir / "projectors.npz").exists():
        with np.load(data_dir / "projectors.npz") as arrays:
            fractions = sidecar.get("fractions", [0.0] * n_modalities)
            projectors = [
                ModalityProjector(
                    theta1=arrays[f"theta1_{i}"],
                    theta2=arrays[f"theta2_{i}"],
                    zero_columns=arrays[f"zero_columns_{i}"],
                    zero_col_fraction=float(fractions[i - 1]),
                )
                for i in range(1, n_modalities + 1)
            ]

    return MultiModalDataset(
        modalities=modalities,
        labels=labels,
        splits=splits,
        latents=latents,
        projectors=projectors,
        noise_scale=noise_scale,
        meta=sidecar,
    )
