"""
Seed-aggregated summary tables.

summary.csv holds mean and std over seeds for every
(backbone, method, metric, modality); summary.txt lays the probe
accuracies out as methods x {X1..XM, All}, one block per backbone.
"""

import logging
from pathlib import Path
from typing import List, Tuple, Union

import pandas as pd

from centrolab.config import BINDING_METHODS
from centrolab.errors import DataError
from centrolab.evalsuite.report import report_frame
from centrolab.guardrails.output_parser import report_parser
from centrolab.models.schemas import EvalReport

logger = logging.getLogger(__name__)

SUMMARY_CSV = "summary.csv"
SUMMARY_TXT = "summary.txt"


def method_order(method: str) -> Tuple[int, int]:
    """Sort key: none, fabind:1..M, then the adaptive methods."""
    base, _, index = method.partition(":")
    rank = BINDING_METHODS.index(base) if base in BINDING_METHODS else len(BINDING_METHODS)
    return rank, int(index) if index.isdigit() else 0


def modality_order(modality: str) -> Tuple[int, str]:
    if modality == "All":
        return 10 ** 6, modality
    if modality.startswith("X") and modality[1:].isdigit():
        return int(modality[1:]), modality
    return 10 ** 6 + 1, modality


def summary_frame(reports: List[EvalReport]) -> pd.DataFrame:
    """
    Mean and population std over seeds.

    Returns:
        DataFrame with columns backbone, method, metric, modality, mean, std, n_seeds
    """
    if not reports:
        raise DataError("no completed cells to summarize")
    frame = report_frame(reports)
    grouped = (
        frame.groupby(["backbone", "method", "metric", "modality"], sort=False)["value"]
        .agg(mean="mean", std=lambda v: v.std(ddof=0), n_seeds="count")
        .reset_index()
    )
    grouped["_m"] = grouped["method"].map(method_order)
    grouped["_x"] = grouped["modality"].map(modality_order)
    grouped = grouped.sort_values(["backbone", "_m", "metric", "_x"], kind="mergesort")
    return grouped.drop(columns=["_m", "_x"]).reset_index(drop=True)


def accuracy_table(summary: pd.DataFrame) -> str:
    """Aligned plain-text table of probe accuracies, one block per backbone."""
    acc = summary[summary["metric"] == "accuracy"]
    columns = sorted(acc["modality"].unique(), key=modality_order)
    blocks = []
    for backbone in sorted(acc["backbone"].unique()):
        part = acc[acc["backbone"] == backbone]
        methods = sorted(part["method"].unique(), key=method_order)
        cells = {
            (r.method, r.modality): f"{r.mean:.4f} ± {r.std:.4f}" for r in part.itertuples(index=False)
        }
        header = ["method"] + list(columns)
        rows = [[m] + [cells.get((m, c), "-") for c in columns] for m in methods]
        widths = [max(len(str(row[i])) for row in [header] + rows) for i in range(len(header))]

        lines = [f"backbone: {backbone}"]
        lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip())
        lines.append("  ".join("-" * w for w in widths))
        for row in rows:
            lines.append("  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def summarize(run_dir: Union[str, Path]) -> pd.DataFrame:
    """
    Write summary.csv and summary.txt for a run directory.

    The output depends only on the report files, so reruns are byte-stable.

    Raises:
        DataError: If the directory holds no completed cell
    """
    run_dir = Path(run_dir)
    reports = report_parser.collect_reports(run_dir)
    if not reports:
        raise DataError(f"no completed cells under {run_dir}")

    summary = summary_frame(reports)
    summary.to_csv(run_dir / SUMMARY_CSV, index=False, float_format="%.17g")
    (run_dir / SUMMARY_TXT).write_text(accuracy_table(summary))
    logger.info(f"Summarized {len(reports)} report(s) into {run_dir / SUMMARY_CSV}")
    return summary
