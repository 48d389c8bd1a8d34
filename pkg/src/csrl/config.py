"""Model and training configuration.

``ModelConfig`` defaults follow the full-scale setup (attention width
1024 with 8 heads and 4 layers; indicator embedding sizes 10/50/50);
:class:`~csrl.estimator.CsrlTagger` overrides them with compact values
suitable for CPU training.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


@dataclass(frozen=True)
class ModelConfig:
    # utterance encoder (reference compact transformer)
    encoder_dim: int = 256
    encoder_layers: int = 2
    encoder_heads: int = 4
    encoder_ffn_dim: int = 512
    max_utterance_len: int = 128
    # dialogue-level self-attention stack
    attn_dim: int = 1024
    heads: int = 8
    layers: int = 4
    # indicator embeddings
    predicate_ind_dim: int = 10
    speaker_ind_dim: int = 50
    turn_ind_dim: int = 50
    turn_clip: int = 10
    # classifier heads and loss
    mlp_hidden: int = 256
    span_loss_weight: float = 1.0
    # ablation switches
    use_predicate_indicator: bool = True
    use_speaker_indicator: bool = True
    use_turn_indicator: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        positive = [
            ("encoder_dim", self.encoder_dim),
            ("encoder_layers", self.encoder_layers),
            ("encoder_heads", self.encoder_heads),
            ("encoder_ffn_dim", self.encoder_ffn_dim),
            ("max_utterance_len", self.max_utterance_len),
            ("attn_dim", self.attn_dim),
            ("heads", self.heads),
            ("layers", self.layers),
            ("predicate_ind_dim", self.predicate_ind_dim),
            ("speaker_ind_dim", self.speaker_ind_dim),
            ("turn_ind_dim", self.turn_ind_dim),
            ("mlp_hidden", self.mlp_hidden),
        ]
        for name, value in positive:
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.attn_dim % self.heads:
            raise ValueError(
                f"attn_dim ({self.attn_dim}) must be divisible by heads ({self.heads})"
            )
        if self.encoder_dim % self.encoder_heads:
            raise ValueError(
                f"encoder_dim ({self.encoder_dim}) must be divisible by "
                f"encoder_heads ({self.encoder_heads})"
            )
        if self.turn_clip < 1:
            raise ValueError(f"turn_clip must be >= 1, got {self.turn_clip}")
        if self.span_loss_weight < 0:
            raise ValueError("span_loss_weight must be non-negative")

    @property
    def indicator_dim(self) -> int:
        total = 0
        if self.use_predicate_indicator:
            total += self.predicate_ind_dim
        if self.use_speaker_indicator:
            total += self.speaker_ind_dim
        if self.use_turn_indicator:
            total += self.turn_ind_dim
        return total

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 5e-5
    dev_split: float = 0.0
    eval_every: int = 10
    early_stop_f1: float | None = None

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 <= self.dev_split < 1.0):
            raise ValueError("dev_split must be in [0, 1)")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown training config fields: {sorted(unknown)}")
        return cls(**data)


RUN_CONFIG_SCHEMA: dict = {
    "type": "object",
    "properties": {
        "model": {"type": "object"},
        "training": {"type": "object"},
        "paths": {
            "type": "object",
            "properties": {
                "train": {"type": "string"},
                "dev": {"type": "string"},
                "checkpoint": {"type": "string"},
            },
            "required": ["train", "checkpoint"],
            "additionalProperties": True,
        },
        "seed": {"type": "integer"},
    },
    "required": ["paths"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    training: TrainingConfig
    paths: dict[str, str]
    seed: int = 0
    raw: dict = field(default_factory=dict, compare=False)

    def config_hash(self) -> str:
        payload = json.dumps(
            {
                "model": self.model.to_dict(),
                "training": self.training.to_dict(),
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def load_run_config(path: str | Path, seed_override: int | None = None) -> RunConfig:
    """Parse and schema-validate a run configuration document."""
    import jsonschema

    with open(path, "r", encoding="utf-8") as fh:
        data: Any = json.load(fh)
    jsonschema.validate(data, RUN_CONFIG_SCHEMA)
    model = ModelConfig.from_dict(data.get("model", {}))
    training = TrainingConfig.from_dict(data.get("training", {}))
    seed = seed_override if seed_override is not None else data.get("seed", 0)
    return RunConfig(
        model=model,
        training=training,
        paths=dict(data["paths"]),
        seed=seed,
        raw=data,
    )
