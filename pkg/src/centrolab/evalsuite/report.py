"""
Assemble and persist evaluation reports.

This module handles:
- Probe accuracies per modality and on concatenated embeddings
- One-to-One and Two-to-One retrieval tables
- JSON and flat CSV serialization of EvalReport
"""

import json
import logging
from itertools import combinations, permutations
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from centrolab.binder.encoders import EncoderSet
from centrolab.evalsuite.alignment import alignment_stats
from centrolab.evalsuite.probe import probe_accuracy
from centrolab.evalsuite.retrieval import retrieval_table
from centrolab.models.schemas import EvalReport, EvalSpec, RetrievalRow
from centrolab.numkit.rng import derive_seed, make_rng
from centrolab.synthgen.dataset import MultiModalDataset

logger = logging.getLogger(__name__)

REPORT_JSON = "report.json"
REPORT_CSV = "report.csv"
CSV_COLUMNS = ["method", "backbone", "metric", "modality", "value", "seed"]


def _retrieval_rows(embeddings: List[np.ndarray], ks: List[int]) -> List[RetrievalRow]:
    gallery_size = embeddings[0].shape[0]
    usable = [k for k in ks if k <= gallery_size]
    if len(usable) < len(ks):
        logger.warning(f"Skipping retrieval ranks {sorted(set(ks) - set(usable))}: gallery has {gallery_size} items")

    rows = []
    n_mod = len(embeddings)
    for i, l in permutations(range(n_mod), 2):
        for k, acc in retrieval_table(embeddings[i], embeddings[l], usable).items():
            rows.append(RetrievalRow(query=f"X{i + 1}", gallery=f"X{l + 1}", k=k, accuracy=acc))
    for i, i2 in combinations(range(n_mod), 2):
        fused = 0.5 * (embeddings[i] + embeddings[i2])
        for l in range(n_mod):
            if l in (i, i2):
                continue
            for k, acc in retrieval_table(fused, embeddings[l], usable).items():
                rows.append(RetrievalRow(query=f"X{i + 1}+X{i2 + 1}", gallery=f"X{l + 1}", k=k, accuracy=acc))
    return rows


def evaluate(
    encoders: EncoderSet,
    dataset: MultiModalDataset,
    spec: EvalSpec,
    method: str,
    backbone: str,
    seed: int,
    config_echo: Optional[Dict] = None,
) -> EvalReport:
    """
    Evaluate a trained encoder set.

    Probes train on the train split and score on `spec.split`; each probe
    gets its own stream derived from (seed, backbone, method).

    Args:
        encoders: Trained encoders
        dataset: Full dataset with train/val/test tags
        spec: Evaluation settings
        method: Method label (none, fabind:N, centrobind, ...)
        backbone: Backbone label (random or pretrained)
        seed: Cell seed
        config_echo: Config dump stored with the report

    Returns:
        EvalReport
    """
    train_rows = dataset.indices("train")
    eval_rows = dataset.indices(spec.split)
    train_y = dataset.labels[train_rows]
    eval_y = dataset.labels[eval_rows]

    train_emb = [encoders.embed(i, dataset.modalities[i][train_rows]) for i in range(encoders.n_modalities)]
    eval_emb = [encoders.embed(i, dataset.modalities[i][eval_rows]) for i in range(encoders.n_modalities)]

    accuracies = {}
    for i in range(encoders.n_modalities):
        rng = make_rng(derive_seed(seed, backbone, method, "probe", i + 1))
        accuracies[f"X{i + 1}"] = probe_accuracy(train_emb[i], train_y, eval_emb[i], eval_y, spec.probe, rng)

    fused = probe_accuracy(
        np.concatenate(train_emb, axis=1),
        train_y,
        np.concatenate(eval_emb, axis=1),
        eval_y,
        spec.probe,
        make_rng(derive_seed(seed, backbone, method, "probe", "all")),
    )

    retrieval = _retrieval_rows(eval_emb, list(spec.ks)) if spec.retrieval and encoders.n_modalities > 1 else []
    alignment = alignment_stats(
        encoders, dataset, spec.split, make_rng(derive_seed(seed, backbone, method, "alignment"))
    )

    logger.info(
        f"Evaluated {method}/{backbone}/seed {seed}: "
        + ", ".join(f"{k}={v:.4f}" for k, v in accuracies.items())
        + f", All={fused:.4f}"
    )
    return EvalReport(
        method=method,
        backbone=backbone,
        seed=seed,
        accuracies=accuracies,
        fused_accuracy=fused,
        retrieval=retrieval,
        alignment=alignment,
        config=config_echo or {},
    )


def report_frame(reports: List[EvalReport]) -> pd.DataFrame:
    rows = [row for report in reports for row in report.csv_rows()]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def save_report(report: EvalReport, out_dir: Union[str, Path]) -> Path:
    """Write report.json and report.csv into `out_dir`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / REPORT_JSON).write_text(report.model_dump_json(indent=2))
    report_frame([report]).to_csv(out_dir / REPORT_CSV, index=False, float_format="%.17g")
    return out_dir / REPORT_JSON


def load_report(path: Union[str, Path]) -> EvalReport:
    """Read a report.json (or the directory holding one)."""
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_JSON
    return EvalReport.model_validate(json.loads(path.read_text()))
