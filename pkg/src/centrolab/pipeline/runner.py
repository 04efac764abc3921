"""
LangGraph experiment runner.

Each (seed, backbone, method) cell runs through a small state machine:

    check_manifest -> dataset -> backbone -> bind -> evaluate -> persist

Datasets and backbones are generated once per seed and cached on disk.
Completed cells are recorded in manifest.json and skipped on rerun.
"""

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from langgraph.graph import END, StateGraph
from tqdm import tqdm

from centrolab.anchors.strategies import AnchorStrategy
from centrolab.binder.encoders import EncoderSet, init_encoder_set, load_encoder_set, save_encoder_set
from centrolab.binder.trainer import TrainTrace, pretrain_backbone, train_adaptive, train_fabind
from centrolab.errors import CentrolabError, ConfigError, NumericError
from centrolab.evalsuite.export import export_embeddings
from centrolab.evalsuite.report import evaluate, save_report
from centrolab.guardrails.output_parser import report_parser
from centrolab.models.schemas import DatasetSpec, EvalReport, ExperimentConfig
from centrolab.numkit.rng import derive_seed, make_rng
from centrolab.pipeline.state import CellState
from centrolab.pipeline.tracking import ensure_experiment, log_cell
from centrolab.synthgen.dataset import MultiModalDataset, generate_dataset, load_dataset, save_dataset
from centrolab.synthgen.gmm import GmmConfig
from centrolab.synthgen.projector import fractions_from_qualities, zero_fraction_schedule

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
CONFIG_ECHO = "config.yaml"


# -----------------------------
# LAYOUT
# -----------------------------
def cell_id(seed: int, backbone: str, method: str) -> str:
    return f"{backbone}/{method}/seed_{seed}"


def seed_dir(run_dir: Union[str, Path], seed: int) -> Path:
    return Path(run_dir) / f"seed_{seed}"


def cell_dir(run_dir: Union[str, Path], seed: int, backbone: str, method: str) -> Path:
    return Path(run_dir) / "cells" / backbone / method.replace(":", "-") / f"seed_{seed}"


# -----------------------------
# MANIFEST
# -----------------------------
def read_manifest(run_dir: Union[str, Path]) -> Dict[str, Dict]:
    path = Path(run_dir) / MANIFEST
    if not path.exists():
        return {}
    return json.loads(path.read_text()).get("cells", {})


def write_manifest(run_dir: Union[str, Path], cells: Dict[str, Dict]) -> None:
    path = Path(run_dir) / MANIFEST
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps({"cells": dict(sorted(cells.items()))}, indent=1))
    os.replace(tmp, path)


# -----------------------------
# DATA AND BACKBONES
# -----------------------------
def modality_fractions(spec: DatasetSpec) -> List[float]:
    if spec.fractions is not None:
        return list(spec.fractions)
    if spec.qualities is not None:
        return fractions_from_qualities(spec.qualities)
    return zero_fraction_schedule(spec.n_modalities)


def modality_qualities(spec: DatasetSpec) -> List[float]:
    return list(spec.qualities) if spec.qualities is not None else [1.0 - f for f in modality_fractions(spec)]


def dataset_from_spec(spec: DatasetSpec, seed: int) -> MultiModalDataset:
    rng = make_rng(derive_seed(seed, "dataset"))
    gmm = GmmConfig.default(rng, n_components=spec.n_classes, d_z=spec.d_z, spread=spec.gmm_spread, seed=seed)
    return generate_dataset(
        spec.n_modalities,
        gmm,
        modality_fractions(spec),
        spec.n_train,
        spec.n_val,
        spec.n_test,
        spec.noise_scale,
        rng,
        d_x=spec.d_x,
        seed=seed,
    )


def ensure_dataset(config: ExperimentConfig, run_dir: Union[str, Path], seed: int) -> MultiModalDataset:
    """Load the seed's dataset, generating and saving it on first use."""
    data_dir = seed_dir(run_dir, seed) / "dataset"
    if (data_dir / "dataset.json").exists():
        logger.info(f"Reusing dataset for seed {seed}")
        return load_dataset(data_dir)
    dataset = dataset_from_spec(config.dataset, seed)
    save_dataset(dataset, data_dir)
    return dataset


def build_backbone(config: ExperimentConfig, dataset: MultiModalDataset, seed: int, backbone: str) -> EncoderSet:
    """Seeded initial encoders, pretrained per modality for the 'pretrained' backbone."""
    encoders = init_encoder_set(
        dataset.n_modalities,
        dataset.modalities[0].shape[1],
        config.encoder.hidden,
        config.encoder.embed_dim,
        make_rng(derive_seed(seed, "init")),
    )
    if backbone == "pretrained":
        encoders = EncoderSet(
            [
                pretrain_backbone(
                    dataset, i, encoders.encoders[i], config.pretrain, make_rng(derive_seed(seed, "pretrain", i + 1))
                )
                for i in range(encoders.n_modalities)
            ]
        )
    return encoders


def ensure_backbone(
    config: ExperimentConfig,
    run_dir: Union[str, Path],
    seed: int,
    backbone: str,
    dataset: MultiModalDataset,
) -> EncoderSet:
    """Load the seed's backbone encoders, building and saving them on first use."""
    enc_dir = seed_dir(run_dir, seed) / "backbones" / backbone
    if (enc_dir / "encoders.json").exists():
        logger.info(f"Reusing {backbone} backbone for seed {seed}")
        return load_encoder_set(enc_dir)
    encoders = build_backbone(config, dataset, seed, backbone)
    save_encoder_set(encoders, enc_dir)
    logger.info(f"Built {backbone} backbone for seed {seed}")
    return encoders


def prepare_seed(config: ExperimentConfig, run_dir: Union[str, Path], seed: int) -> int:
    dataset = ensure_dataset(config, run_dir, seed)
    for backbone in config.backbones:
        ensure_backbone(config, run_dir, seed, backbone.value, dataset)
    return seed


# -----------------------------
# BINDING
# -----------------------------
def strategy_for_method(method: str, config: ExperimentConfig) -> Optional[AnchorStrategy]:
    """Anchor strategy of an adaptive method; None for 'none' and fabind."""
    if method == "centrobind":
        return AnchorStrategy.centroid()
    if method == "wavg":
        return AnchorStrategy.weighted(config.anchor_weights or modality_qualities(config.dataset))
    if method == "random":
        return AnchorStrategy.random_modality(freeze_anchor_encoder=True)
    if method == "random-intra":
        return AnchorStrategy.random_modality(freeze_anchor_encoder=False)
    if method == "median":
        return AnchorStrategy.median()
    return None


def train_method(
    method: str,
    dataset: MultiModalDataset,
    encoders: EncoderSet,
    config: ExperimentConfig,
    rng,
) -> Tuple[EncoderSet, TrainTrace]:
    """
    Bind `encoders` with one experiment method.

    Raises:
        ConfigError: On an unknown method
    """
    if method == "none":
        return encoders.copy(), TrainTrace("none", np.zeros((0, encoders.n_modalities)))
    if method.startswith("fabind:"):
        anchor = int(method.split(":", 1)[1])
        bind = config.bind.model_copy(update={"anchor_modality": anchor})
        return train_fabind(dataset, encoders.frozen(anchor - 1), bind, rng)
    strategy = strategy_for_method(method, config)
    if strategy is None:
        raise ConfigError(f"unknown method '{method}'")
    return train_adaptive(dataset, encoders, config.bind, rng, strategy=strategy)


# -----------------------------
# CELL GRAPH
# -----------------------------
class CellRunner:
    def __init__(self):
        self.graph = self._build_graph()

    def _build_graph(self):
        """
        Build the cell state machine.

        check_manifest routes completed cells straight to END; every other
        cell runs the full chain once.
        """
        workflow = StateGraph(CellState)

        workflow.add_node("check_manifest", self._check_manifest_node)
        workflow.add_node("dataset", self._dataset_node)
        workflow.add_node("backbone", self._backbone_node)
        workflow.add_node("bind", self._bind_node)
        workflow.add_node("evaluate", self._evaluate_node)
        workflow.add_node("persist", self._persist_node)

        workflow.set_entry_point("check_manifest")
        workflow.add_conditional_edges(
            "check_manifest",
            self._route_after_manifest,
            {"skip": END, "run": "dataset"},
        )
        workflow.add_edge("dataset", "backbone")
        workflow.add_edge("backbone", "bind")
        workflow.add_edge("bind", "evaluate")
        workflow.add_edge("evaluate", "persist")
        workflow.add_edge("persist", END)

        return workflow.compile()

    # -----------------------------
    # NODES
    # -----------------------------
    def _check_manifest_node(self, state: CellState) -> CellState:
        cid = cell_id(state["seed"], state["backbone"], state["method"])
        entry = read_manifest(state["run_dir"]).get(cid)
        has_report = report_parser.is_report_complete(state["cell_dir"])

        if entry and entry.get("status") == "complete" and has_report:
            logger.info(f"Skipping completed cell {cid}")
            state["skipped"] = True
            state["status"] = "skipped"
            return state

        if entry and not has_report:
            logger.warning(f"Cell {cid} is in the manifest but its report is missing; recomputing")
        elif has_report and not entry:
            logger.warning(f"Cell {cid} has artifacts from a partial run; recomputing")
        state["skipped"] = False
        return state

    def _dataset_node(self, state: CellState) -> CellState:
        config = ExperimentConfig.model_validate(state["config"])
        state["dataset"] = ensure_dataset(config, state["run_dir"], state["seed"])
        return state

    def _backbone_node(self, state: CellState) -> CellState:
        config = ExperimentConfig.model_validate(state["config"])
        state["encoders"] = ensure_backbone(
            config, state["run_dir"], state["seed"], state["backbone"], state["dataset"]
        )
        return state

    def _bind_node(self, state: CellState) -> CellState:
        config = ExperimentConfig.model_validate(state["config"])
        rng = make_rng(derive_seed(state["seed"], state["backbone"], state["method"], "bind"))
        trained, trace = train_method(state["method"], state["dataset"], state["encoders"], config, rng)
        state["trained"] = trained
        state["trace"] = trace
        return state

    def _evaluate_node(self, state: CellState) -> CellState:
        config = ExperimentConfig.model_validate(state["config"])
        echo = dict(state["config"], cell={"seed": state["seed"], "backbone": state["backbone"], "method": state["method"]})
        report = evaluate(
            state["trained"],
            state["dataset"],
            config.eval,
            state["method"],
            state["backbone"],
            state["seed"],
            config_echo=echo,
        )
        state["report"] = report.model_dump(mode="json")
        return state

    def _persist_node(self, state: CellState) -> CellState:
        out = Path(state["cell_dir"])
        out.mkdir(parents=True, exist_ok=True)
        config = ExperimentConfig.model_validate(state["config"])
        trace: TrainTrace = state["trace"]

        trace.to_csv(out / "trace.csv")
        save_encoder_set(state["trained"], out / "encoders")
        if config.eval.export_embeddings:
            export_embeddings(state["trained"], state["dataset"], out / "embeddings.csv", split=config.eval.split)
        (out / "cell.json").write_text(
            json.dumps(
                {
                    "method": state["method"],
                    "backbone": state["backbone"],
                    "seed": state["seed"],
                    "epochs": trace.epochs,
                    "wall_clock": trace.wall_clock,
                    "checksums": state["trained"].checksums(),
                },
                indent=1,
            )
        )
        report = EvalReport.model_validate(state["report"])
        log_cell(
            state["run_dir"],
            cell_id(state["seed"], state["backbone"], state["method"]),
            config,
            state["seed"],
            state["backbone"],
            state["method"],
            report,
            trace.losses[-1] if trace.epochs else np.full(trace.losses.shape[1], np.nan),
            trace.wall_clock,
            artifacts=[out / "cell.json"],
        )
        # report last: its presence marks the cell as finished on disk
        save_report(report, out)
        state["status"] = "complete"
        return state

    # -----------------------------
    # ROUTING LOGIC
    # -----------------------------
    def _route_after_manifest(self, state: CellState) -> Literal["skip", "run"]:
        return "skip" if state.get("skipped") else "run"

    # -----------------------------
    # PUBLIC API
    # -----------------------------
    def run(self, run_dir: Union[str, Path], config: ExperimentConfig, seed: int, backbone: str, method: str) -> Dict:
        state = CellState(
            run_dir=str(run_dir),
            config=config.model_dump(mode="json"),
            seed=seed,
            backbone=backbone,
            method=method,
            cell_dir=str(cell_dir(run_dir, seed, backbone, method)),
            status="pending",
            error=None,
        )
        result = self.graph.invoke(state)
        return {
            "cell": cell_id(seed, backbone, method),
            "status": result.get("status", "complete"),
            "report": str(Path(result["cell_dir"]) / "report.json"),
        }


_runner: Optional[CellRunner] = None


def run_cell(run_dir: str, config_data: Dict, seed: int, backbone: str, method: str) -> Dict:
    """
    Process-pool entry point for one cell.

    Errors are returned, not raised, so one failed cell does not stop the grid.
    """
    global _runner
    if _runner is None:
        _runner = CellRunner()
    config = ExperimentConfig.model_validate(config_data)
    try:
        return _runner.run(run_dir, config, seed, backbone, method)
    except CentrolabError as e:
        logger.error(f"Cell {cell_id(seed, backbone, method)} failed: {e}", exc_info=True)
        return {
            "cell": cell_id(seed, backbone, method),
            "status": "failed",
            "error": str(e),
            "exit_code": e.exit_code,
        }


# -----------------------------
# EXPERIMENT
# -----------------------------
def write_config_echo(config: ExperimentConfig, run_dir: Path) -> None:
    """
    Store the config next to the results.

    Raises:
        ConfigError: If the directory already holds results of a different config
    """
    echo = yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True)
    path = run_dir / CONFIG_ECHO
    if path.exists() and path.read_text() != echo:
        raise ConfigError(f"{run_dir} holds results of a different config; choose another --out")
    path.write_text(echo)


def _pool_map(fn, jobs: List[tuple], threads: int, desc: str):
    if threads <= 1:
        for job in tqdm(jobs, desc=desc, disable=not logger.isEnabledFor(logging.INFO)):
            yield fn(*job)
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, *job) for job in jobs]
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc,
                           disable=not logger.isEnabledFor(logging.INFO)):
            yield future.result()


def _prepare_job(config_data: Dict, run_dir: str, seed: int) -> int:
    return prepare_seed(ExperimentConfig.model_validate(config_data), run_dir, seed)


def run_experiment(config: ExperimentConfig, run_dir: Union[str, Path], threads: int = 1) -> Path:
    """
    Run every seed x backbone x method cell of an experiment.

    Args:
        config: Validated experiment config
        run_dir: Run directory; all artifacts are written below it
        threads: Worker processes

    Returns:
        The run directory

    Raises:
        ConfigError: If run_dir belongs to another config
        NumericError: If a cell diverged
        CentrolabError: If a cell failed for another reason
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    write_config_echo(config, run_dir)
    ensure_experiment(run_dir, config.name)
    config_data = config.model_dump(mode="json")

    logger.info(
        f"Running '{config.name}': {len(config.seeds)} seed(s) x {len(config.backbones)} backbone(s) "
        f"x {len(config.methods)} method(s) in {run_dir}"
    )
    seed_jobs = [(config_data, str(run_dir), seed) for seed in config.seeds]
    for seed in _pool_map(_prepare_job, seed_jobs, threads, "seeds"):
        logger.debug(f"Seed {seed} prepared")

    cells = read_manifest(run_dir)
    jobs = [
        (str(run_dir), config_data, seed, backbone.value, method)
        for seed in config.seeds
        for backbone in config.backbones
        for method in config.methods
    ]
    failures = []
    for result in _pool_map(run_cell, jobs, threads, "cells"):
        if result["status"] == "failed":
            failures.append(result)
            continue
        cells[result["cell"]] = {"status": "complete", "report": str(Path(result["report"]).relative_to(run_dir))}
        write_manifest(run_dir, cells)

    if failures:
        summary = "; ".join(f"{f['cell']}: {f['error']}" for f in failures)
        if any(f["exit_code"] == NumericError.exit_code for f in failures):
            raise NumericError(f"{len(failures)} cell(s) failed: {summary}")
        raise CentrolabError(f"{len(failures)} cell(s) failed: {summary}")

    logger.info(f"Experiment '{config.name}' complete: {len(jobs)} cell(s)")
    return run_dir
