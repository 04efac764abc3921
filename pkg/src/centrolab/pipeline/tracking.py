"""
mlflow tracking of experiment cells.

Every completed cell becomes one mlflow run named after its cell id, in an
experiment named after the config. Runs go to a file store under the run
directory unless CENTROLAB_MLFLOW_TRACKING_URI points elsewhere.
"""

import logging
import re
from pathlib import Path
from typing import Dict, Optional, Union

import mlflow
import numpy as np

from centrolab.config import settings
from centrolab.models.schemas import EvalReport, ExperimentConfig

logger = logging.getLogger(__name__)

MLRUNS = "mlruns"

_UNSAFE_KEY = re.compile(r"[^\w./ -]")


def tracking_uri(run_dir: Union[str, Path]) -> str:
    if settings.mlflow_tracking_uri:
        return settings.mlflow_tracking_uri
    return (Path(run_dir).resolve() / MLRUNS).as_uri()


def metric_key(*parts: str) -> str:
    """Join key parts with '/' and replace characters mlflow rejects."""
    return "/".join(_UNSAFE_KEY.sub("_", p.replace("->", "_to_").replace("+", "_")) for p in parts)


def ensure_experiment(run_dir: Union[str, Path], name: str) -> Optional[str]:
    """
    Point mlflow at the run's store and create the experiment once.

    Called from the parent process before cells start, so workers only
    look the experiment up.

    Returns:
        Experiment id, or None when tracking is disabled
    """
    if not settings.mlflow_tracking:
        return None
    uri = tracking_uri(run_dir)
    mlflow.set_tracking_uri(uri)
    experiment = mlflow.get_experiment_by_name(name)
    if experiment is not None:
        return experiment.experiment_id
    experiment_id = mlflow.create_experiment(name)
    logger.info(f"MLflow tracking: {uri} (experiment '{name}')")
    return experiment_id


def cell_params(config: ExperimentConfig, seed: int, backbone: str, method: str) -> Dict[str, object]:
    return {
        "method": method,
        "backbone": backbone,
        "seed": seed,
        "n_modalities": config.dataset.n_modalities,
        "n_classes": config.dataset.n_classes,
        "d_x": config.dataset.d_x,
        "d_z": config.dataset.d_z,
        "noise_scale": config.dataset.noise_scale,
        "hidden": ",".join(str(h) for h in config.encoder.hidden),
        "embed_dim": config.encoder.embed_dim,
        "tau": config.bind.tau,
        "epochs": config.bind.epochs,
        "batch_size": config.bind.batch_size,
        "lr": config.bind.lr,
        "eval_split": config.eval.split,
    }


def cell_metrics(report: EvalReport, final_losses: np.ndarray, wall_clock: float) -> Dict[str, float]:
    """Accuracies, retrieval, alignment and the last epoch's losses as flat mlflow metrics."""
    metrics = {metric_key("accuracy", m): acc for m, acc in report.accuracies.items()}
    if report.fused_accuracy is not None:
        metrics[metric_key("accuracy", "All")] = report.fused_accuracy
    for r in report.retrieval:
        metrics[metric_key(f"top{r.k}", f"{r.query}->{r.gallery}")] = r.accuracy
    for key, value in report.alignment.items():
        metrics[metric_key(*key.split(":", 1))] = value
    for i, loss in enumerate(final_losses):
        if np.isfinite(loss):
            metrics[metric_key("loss", f"X{i + 1}")] = float(loss)
    metrics["wall_clock"] = wall_clock
    return metrics


def log_cell(
    run_dir: Union[str, Path],
    run_name: str,
    config: ExperimentConfig,
    seed: int,
    backbone: str,
    method: str,
    report: EvalReport,
    final_losses: np.ndarray,
    wall_clock: float,
    artifacts: Optional[list] = None,
) -> Optional[str]:
    """
    Record one cell as an mlflow run.

    Returns:
        mlflow run id, or None when tracking is disabled
    """
    if not settings.mlflow_tracking:
        return None
    mlflow.set_tracking_uri(tracking_uri(run_dir))
    experiment = mlflow.get_experiment_by_name(config.name)
    experiment_id = experiment.experiment_id if experiment else ensure_experiment(run_dir, config.name)

    with mlflow.start_run(experiment_id=experiment_id, run_name=run_name) as run:
        mlflow.log_params(cell_params(config, seed, backbone, method))
        mlflow.log_metrics(cell_metrics(report, final_losses, wall_clock))
        for path in artifacts or []:
            mlflow.log_artifact(str(path))
    logger.debug(f"Cell {run_name} logged to mlflow run {run.info.run_id}")
    return run.info.run_id
