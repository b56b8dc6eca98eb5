"""Single source of truth for every tunable threshold.

Defaults follow the published operating point (e1=0, e2=0.5, rho=0.5,
delta=0.5, zeta=0.01, T=100, beta=0.98, gamma=4.5); epsilon is meant to be
re-derived with the pretest subcommand. A JSON config file can override any
field, and CLI flags override the file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .energy import EnergyModel
from .goc_loss import GocLossConfig
from .inference import CandidateRule, InferenceConfig
from .sampling import PartitionConfig


@dataclass
class PipelineConfig:
    # sample partition
    e1: float = 0.0
    e2: float = 0.5
    rho: float = 0.5
    # confidence losses
    delta: float = 0.5
    zeta: float = 0.01
    con_normalization: str = "literal_floor"
    # energy suppression
    t_lowest: int = 100
    class_weights: Optional[list[float]] = None
    # inference
    gamma: float = 4.5
    beta: float = 0.98
    epsilon: float = 0.5
    candidate_rule: str = "top_k"
    candidate_k: int = 100
    candidate_tau: float = 0.5
    known_score_threshold: float = 0.05
    known_nms_iou: float = 0.5
    # evaluation
    iou_threshold: float = 0.5
    recall_level: float = 0.8
    ap_method: str = "all_point"

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        raw = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**raw)

    def apply_overrides(self, **overrides) -> "PipelineConfig":
        for key, value in overrides.items():
            if value is not None:
                setattr(self, key, value)
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def partition_config(self) -> PartitionConfig:
        return PartitionConfig(e1=self.e1, e2=self.e2, rho=self.rho)

    def goc_config(self) -> GocLossConfig:
        return GocLossConfig(
            delta=self.delta, zeta=self.zeta, con_normalization=self.con_normalization
        )

    def inference_config(self) -> InferenceConfig:
        return InferenceConfig(
            gamma=self.gamma,
            beta=self.beta,
            epsilon=self.epsilon,
            candidate_rule=CandidateRule(
                self.candidate_rule, k=self.candidate_k, tau=self.candidate_tau
            ),
            known_score_threshold=self.known_score_threshold,
            known_nms_iou=self.known_nms_iou,
        )

    def energy_model(self, num_classes: int) -> EnergyModel:
        if self.class_weights is None:
            return EnergyModel.uniform(num_classes)
        weights = np.asarray(self.class_weights, dtype=float)
        if weights.size != num_classes:
            raise ValueError(
                f"config has {weights.size} class weights for {num_classes} classes"
            )
        return EnergyModel(weights)


def load_config(path: Optional[str]) -> PipelineConfig:
    return PipelineConfig.from_file(path) if path else PipelineConfig()
