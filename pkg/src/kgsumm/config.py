"""Pipeline configuration: one flat JSON object, overridable from the command line."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from typing import Optional

from .dkb import DKBConfig
from .relation_model.model import ModelConfig
from .relation_model.train import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    # paths
    corpus: Optional[str] = None
    embeddings: Optional[str] = None
    routes: Optional[str] = None
    stoplist: Optional[str] = None
    dkb_dir: str = "dkb"
    model: Optional[str] = None
    output_dir: str = "out"
    metric_params: Optional[str] = None
    pairs: Optional[str] = None
    domain: Optional[str] = None
    # knowledge base
    d: float = 0.85
    window: int = 5
    k: int = 500
    alpha: float = 1 / 3
    beta: float = 1 / 3
    gamma: float = 1 / 3
    ptt_threshold: float = 0.01
    sim_threshold: float = 0.4
    min_df: int = 1
    tol: float = 1e-6
    max_iter: int = 100
    # relation model
    lr: float = 0.001
    batch_size: int = 32
    epochs: int = 10
    lambda_trans: float = 1.0
    lambda_clas: float = 1.0
    emb_dim: int = 100
    hidden: int = 300
    max_decode_len: int = 64
    min_count: int = 2
    max_span_tokens: int = 64
    # summarization
    budget_words: Optional[int] = None
    budget_ratio: Optional[float] = 0.2
    unspaced: bool = False
    length_unit: str = "tokens"
    strict_alternation: bool = True
    seed: int = 0

    def validate(self) -> None:
        if not 0 < self.d < 1:
            raise ConfigError("d must lie in (0, 1)")
        if self.window < 2:
            raise ConfigError("window must be at least 2")
        if self.k < 1:
            raise ConfigError("k must be positive")
        if min(self.alpha, self.beta, self.gamma) < 0 or self.alpha + self.beta + self.gamma == 0:
            raise ConfigError("alpha, beta, gamma must be non-negative and not all zero")
        if not 0 <= self.ptt_threshold <= 1:
            raise ConfigError("ptt_threshold must lie in [0, 1]")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.lambda_trans < 0 or self.lambda_clas < 0 or self.lambda_trans + self.lambda_clas == 0:
            raise ConfigError("lambda_trans and lambda_clas must be non-negative and not both zero")
        if self.budget_words is not None and self.budget_words < 1:
            raise ConfigError("budget_words must be positive")
        if self.budget_ratio is not None and not 0 < self.budget_ratio <= 1:
            raise ConfigError("budget_ratio must lie in (0, 1]")
        if self.length_unit not in ("tokens", "chars"):
            raise ConfigError("length_unit must be 'tokens' or 'chars'")

    @property
    def separator(self) -> str:
        return "" if self.unspaced else " "

    def dkb_config(self, stoplist=frozenset()) -> DKBConfig:
        return DKBConfig(
            k=self.k,
            d=self.d,
            sim_threshold=self.sim_threshold,
            window=self.window,
            alpha=self.alpha,
            beta=self.beta,
            gamma=self.gamma,
            ptt_threshold=self.ptt_threshold,
            tol=self.tol,
            max_iter=self.max_iter,
            min_df=self.min_df,
            stoplist=frozenset(stoplist),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            batch_size=self.batch_size,
            epochs=self.epochs,
            lambda_trans=self.lambda_trans,
            lambda_clas=self.lambda_clas,
            seed=self.seed,
            max_decode_len=self.max_decode_len,
            min_count=self.min_count,
        )

    def model_config(self) -> ModelConfig:
        return ModelConfig(emb_dim=self.emb_dim, hidden=self.hidden, max_decode_len=self.max_decode_len)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_FIELDS = {f.name: f for f in fields(PipelineConfig)}


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> PipelineConfig:
    """Defaults, then the config file, then non-None ``overrides``."""
    values: dict = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a flat JSON object")
        unknown = set(data) - set(_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            if isinstance(value, (dict, list)):
                raise ConfigError(f"config key {key!r} must be a scalar")
        values.update(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg
