"""
Pydantic models for configuration, validation and serialization.

This module defines the schema for:
- Experiment configuration (dataset, encoders, pretraining, binding, evaluation)
- Evaluation reports and their flat CSV rows
- Theory-check result rows
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from centrolab.config import (
    BINDING_METHODS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_D_X,
    DEFAULT_D_Z,
    DEFAULT_EMBED_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN,
    DEFAULT_K,
    DEFAULT_LR,
    DEFAULT_NOISE_SCALE,
    DEFAULT_TAU,
    GMM_MEAN_SPREAD,
    PROBE_BATCH_SIZE,
    PROBE_EPOCHS,
    PROBE_HIDDEN,
    PROBE_LR,
    RETRIEVAL_KS,
    settings,
)


class Backbone(str, Enum):
    """Initial encoder condition."""
    RANDOM = "random"
    PRETRAINED = "pretrained"


class DatasetSpec(BaseModel):
    """Synthetic dataset parameters."""
    model_config = ConfigDict(extra="forbid")

    n_modalities: int = Field(4, ge=1, description="Number of modalities M")
    d_x: int = Field(DEFAULT_D_X, ge=1, description="Observation dimension")
    d_z: int = Field(DEFAULT_D_Z, ge=1, description="Latent dimension")
    n_classes: int = Field(DEFAULT_K, ge=1, description="GMM components K (= label count)")
    gmm_spread: float = Field(GMM_MEAN_SPREAD, gt=0, description="Std of the GMM means")
    fractions: Optional[List[float]] = Field(
        None, description="Zero-column fraction per modality; linear 0.6 -> 0.1 schedule when omitted"
    )
    qualities: Optional[List[float]] = Field(
        None, description="Modality qualities in [0, 1]; fraction = 1 - quality"
    )
    noise_scale: float = Field(DEFAULT_NOISE_SCALE, ge=0, description="Observation noise std")
    n_train: int = Field(7000, ge=1)
    n_val: int = Field(1500, ge=0)
    n_test: int = Field(1500, ge=1)

    @model_validator(mode="after")
    def check_fractions(self) -> "DatasetSpec":
        if self.fractions is not None and self.qualities is not None:
            raise ValueError("give either fractions or qualities, not both")
        for name in ("fractions", "qualities"):
            values = getattr(self, name)
            if values is None:
                continue
            if len(values) != self.n_modalities:
                raise ValueError(f"{name} has {len(values)} entries for {self.n_modalities} modalities")
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise ValueError(f"{name} must lie in [0, 1]")
        return self


class EncoderSpec(BaseModel):
    """Encoder architecture shared by all modalities."""
    model_config = ConfigDict(extra="forbid")

    hidden: List[int] = Field(default_factory=lambda: list(DEFAULT_HIDDEN))
    embed_dim: int = Field(DEFAULT_EMBED_DIM, ge=1)


class PretrainConfig(BaseModel):
    """Uni-modal InfoNCE pretraining of the backbones."""
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(30, ge=0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=2)
    lr: float = Field(DEFAULT_LR, gt=0)
    tau: float = Field(DEFAULT_TAU, gt=0)


class BindConfig(BaseModel):
    """
    Binding hyper-parameters.

    `anchor` selects the adaptive strategy (centroid, wavg:w1,.., random,
    random-intra, median); `anchor_modality` is the 1-based fixed anchor
    used by FABind.
    """
    model_config = ConfigDict(extra="forbid")

    tau: float = Field(DEFAULT_TAU, gt=0, description="Temperature")
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=2, description="Pairs per batch |I_B|")
    epochs: int = Field(DEFAULT_EPOCHS, ge=0, description="Passes over the train split t_max")
    lr: float = Field(DEFAULT_LR, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    weight_decay: float = Field(0.0, ge=0)
    anchor: str = Field("centroid", description="Adaptive anchor strategy flag")
    anchor_modality: Optional[int] = Field(None, ge=1, description="FABind anchor X_i (1-based)")
    symmetric: bool = Field(True, description="Symmetrize FABind's InfoNCE")


class ProbeConfig(BaseModel):
    """MLP probe used for acc(Z_i) and acc(All)."""
    model_config = ConfigDict(extra="forbid")

    hidden: int = Field(PROBE_HIDDEN, ge=1)
    epochs: int = Field(PROBE_EPOCHS, ge=1)
    lr: float = Field(PROBE_LR, gt=0)
    batch_size: int = Field(PROBE_BATCH_SIZE, ge=1)


class EvalSpec(BaseModel):
    """Downstream evaluation settings."""
    model_config = ConfigDict(extra="forbid")

    probe: ProbeConfig = Field(default_factory=ProbeConfig)
    ks: List[int] = Field(default_factory=lambda: list(RETRIEVAL_KS))
    split: str = Field("test", description="Split evaluated (probes train on 'train')")
    retrieval: bool = True
    export_embeddings: bool = False

    @field_validator("split")
    @classmethod
    def check_split(cls, v: str) -> str:
        if v not in ("val", "test"):
            raise ValueError("evaluation split must be 'val' or 'test'")
        return v


class ExperimentConfig(BaseModel):
    """
    Full experiment grid: seeds x backbones x methods.

    This is the document parsed from the YAML config files.
    """
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "name": "m4_default",
                "dataset": {"n_modalities": 4, "n_classes": 50},
                "backbones": ["random", "pretrained"],
                "methods": ["none", "fabind:1", "fabind:4", "centrobind"],
                "seeds": [11, 12, 13, 14, 15],
            }
        },
    )

    name: str = Field(..., min_length=1, description="Experiment name")
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    encoder: EncoderSpec = Field(default_factory=EncoderSpec)
    backbones: List[Backbone] = Field(default_factory=lambda: [Backbone.RANDOM, Backbone.PRETRAINED])
    methods: List[str] = Field(default_factory=lambda: ["none", "fabind:1", "fabind:4", "centrobind"])
    anchor_weights: Optional[List[float]] = Field(
        None, description="Weights of the wavg method; defaults to the dataset qualities"
    )
    pretrain: PretrainConfig = Field(default_factory=PretrainConfig)
    bind: BindConfig = Field(default_factory=BindConfig)
    eval: EvalSpec = Field(default_factory=EvalSpec)
    seeds: List[int] = Field(default_factory=lambda: list(settings.default_seeds), min_length=1)
    output_dir: Optional[str] = None

    @field_validator("methods")
    @classmethod
    def check_methods(cls, methods: List[str]) -> List[str]:
        if not methods:
            raise ValueError("at least one method is required")
        normalized = []
        for m in methods:
            m = m.strip().lower()
            base = m.split(":", 1)[0]
            if base not in BINDING_METHODS:
                raise ValueError(f"unknown method '{m}'")
            if base == "fabind":
                _, _, index = m.partition(":")
                if not index.isdigit() or int(index) < 1:
                    raise ValueError(f"fabind needs a 1-based anchor index, e.g. 'fabind:4', got '{m}'")
            normalized.append(m)
        return normalized

    @model_validator(mode="after")
    def check_anchor_indices(self) -> "ExperimentConfig":
        n_mod = self.dataset.n_modalities
        for m in self.methods:
            if m.startswith("fabind:") and int(m.split(":")[1]) > n_mod:
                raise ValueError(f"'{m}' refers to a modality beyond M={n_mod}")
        if "wavg" in self.methods:
            weights = self.anchor_weights or self.dataset.qualities
            if weights is None:
                raise ValueError("method 'wavg' needs anchor_weights or dataset.qualities")
            if len(weights) != n_mod:
                raise ValueError(f"{len(weights)} anchor weights for {n_mod} modalities")
        return self

    @model_validator(mode="after")
    def check_eval_split(self) -> "ExperimentConfig":
        if self.eval.split == "val" and self.dataset.n_val == 0:
            raise ValueError("eval.split is 'val' but dataset.n_val is 0")
        return self


class RetrievalRow(BaseModel):
    """Top-k retrieval accuracy for one query/gallery combination."""
    query: str = Field(..., description="Query modalities, e.g. 'X1' or 'X1+X2'")
    gallery: str = Field(..., description="Gallery modality, e.g. 'X4'")
    k: int = Field(..., ge=1)
    accuracy: float = Field(..., ge=0, le=1)


class TheoryRow(BaseModel):
    """One verification instance."""
    check: str
    instance: int
    params: Dict[str, float] = Field(default_factory=dict)
    lhs: float
    rhs: float
    slack: float
    passed: bool


class EvalReport(BaseModel):
    """
    Evaluation of one trained encoder set.

    Accuracies are keyed by modality name (X1..XM); `fused_accuracy`
    is acc(All).
    """
    method: str
    backbone: str
    seed: int
    accuracies: Dict[str, float] = Field(default_factory=dict)
    fused_accuracy: Optional[float] = Field(None, ge=0, le=1)
    retrieval: List[RetrievalRow] = Field(default_factory=list)
    alignment: Dict[str, float] = Field(default_factory=dict)
    config: Dict = Field(default_factory=dict, description="Config echo")

    @field_validator("accuracies")
    @classmethod
    def check_accuracies(cls, v: Dict[str, float]) -> Dict[str, float]:
        for key, acc in v.items():
            if not 0.0 <= acc <= 1.0:
                raise ValueError(f"accuracy for {key} is {acc}, outside [0, 1]")
        return v

    def csv_rows(self) -> List[Dict]:
        """Flat rows `method,backbone,metric,modality,value,seed`."""
        rows = []
        for modality, acc in sorted(self.accuracies.items(), key=lambda kv: int(kv[0][1:])):
            rows.append(self._row("accuracy", modality, acc))
        if self.fused_accuracy is not None:
            rows.append(self._row("accuracy", "All", self.fused_accuracy))
        for r in self.retrieval:
            rows.append(self._row(f"top{r.k}", f"{r.query}->{r.gallery}", r.accuracy))
        for key, value in sorted(self.alignment.items()):
            rows.append(self._row("similarity", key, value))
        return rows

    def _row(self, metric: str, modality: str, value: float) -> Dict:
        return {
            "method": self.method,
            "backbone": self.backbone,
            "metric": metric,
            "modality": modality,
            "value": value,
            "seed": self.seed,
        }
