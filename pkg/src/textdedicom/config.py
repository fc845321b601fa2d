"""Pipeline configuration loaded from a single JSON document.

Precedence: built-in defaults < config file < command-line flags.
Relative paths in a config file are resolved against the file's directory.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from textdedicom.dedicom import TrainConfig
from textdedicom.errors import InputError
from textdedicom.textprep import PreprocessConfig, load_stopwords

METHODS = ("dedicom", "nmf", "svd")
_PATH_FIELDS = ("documents", "table", "cache_dir", "stopwords", "output_dir")


@dataclass(frozen=True)
class PipelineConfig:
    # inputs: plain-text files (one document each) or rows of an article table
    documents: tuple = ()
    article_ids: tuple = ()
    table: str | None = None
    cache_dir: str | None = None
    offline: bool = False
    api_url: str | None = None
    # preprocessing
    stopwords: str | None = None
    min_token_length: int = 2
    lowercase: bool = True
    # co-occurrence
    window_size: int = 7
    symmetric: bool = True
    zero_diagonal: bool = False
    # factorization
    method: str = "dedicom"
    k: int = 6
    lr_A: float = 0.001
    lr_R: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    num_epochs: int = 15000
    loss_log_stride: int = 1
    simultaneous: bool = False
    early_stop_tol: float | None = None
    nmf_iters: int = 500
    seed: int = 0
    # reporting
    top_m: int = 10
    neighbor_count: int = 4
    neighbor_words_per_topic: int = 2
    output_dir: str = "out"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.window_size < 1:
            raise InputError("window_size must be >= 1")
        if self.k < 2:
            raise InputError(f"k must be >= 2, got {self.k}")
        if self.nmf_iters < 1:
            raise InputError("nmf_iters must be >= 1")
        # delegate the optimizer checks
        self.train_config()
        self.preprocess_config()

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            k=self.k, lr_A=self.lr_A, lr_R=self.lr_R, beta1=self.beta1, beta2=self.beta2,
            epsilon=self.epsilon, num_epochs=self.num_epochs, seed=self.seed,
            loss_log_stride=self.loss_log_stride, simultaneous=self.simultaneous,
            early_stop_tol=self.early_stop_tol,
        )

    def preprocess_config(self) -> PreprocessConfig:
        stop = load_stopwords(self.stopwords) if self.stopwords else load_stopwords()
        return PreprocessConfig(stop, self.min_token_length, self.lowercase)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["documents"] = list(self.documents)
        d["article_ids"] = list(self.article_ids)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config fields: {sorted(unknown)}")
        data = dict(data)
        if base_dir is not None:
            base = Path(base_dir)
            for name in _PATH_FIELDS:
                value = data.get(name)
                if isinstance(value, str):
                    data[name] = str((base / value).resolve())
                elif isinstance(value, list):
                    data[name] = [str((base / v).resolve()) for v in value]
        for name in ("documents", "article_ids"):
            if name in data:
                data[name] = tuple(data[name])
        try:
            return cls(**data)
        except TypeError as exc:
            raise InputError(f"bad config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError(f"config {path} must be a JSON object")
        return cls.from_dict(data, base_dir=path.parent)
