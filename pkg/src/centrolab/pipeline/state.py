"""
State definition for the LangGraph cell pipeline.

This module defines the state structure that flows through
one (seed, backbone, method) cell of an experiment.
"""

from typing import Any, Dict, Optional

from typing_extensions import TypedDict


class CellState(TypedDict, total=False):
    """
    State object that flows through the cell graph.

    Filled progressively: identity first, then artifacts as each stage runs.
    """

    # Cell identity
    run_dir: str
    config: Dict[str, Any]  # ExperimentConfig dump
    seed: int
    backbone: str  # "random" | "pretrained"
    method: str  # none | fabind:N | centrobind | wavg | random | random-intra | median
    cell_dir: str

    # Manifest
    skipped: bool

    # Artifacts
    dataset: Any  # MultiModalDataset
    encoders: Any  # EncoderSet before binding
    trained: Any  # EncoderSet after binding
    trace: Any  # TrainTrace
    report: Optional[Dict[str, Any]]  # EvalReport dump

    # Lifecycle
    status: str  # "complete" | "skipped" | "failed"
    error: Optional[str]
