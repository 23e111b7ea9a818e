"""
Configuration management for eurovoc_indexer
"""

import os
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

try:
    import yaml
except ImportError:
    yaml = None

try:
    import tomllib
except ImportError:
    tomllib = None


def _env_tuple(name: str, default: str, cast) -> tuple:
    raw = os.getenv(name, default)
    return tuple(cast(part) for part in raw.split(",") if part.strip())


@dataclass
class Config:
    """
    Configuration for eurovoc_indexer.

    Attributes:
        registry_root: Directory holding registered model bundles
        default_language: Language used when none is given
        num_labels: Number of labels returned by classification
        level: Default label level (ID, MT or DO)
        aggregation: How ID scores are folded into MT/DO scores (max, sum, mean)
        lowercase: Lowercase text before subword tokenization
        max_sequence: Maximum encoded document length
        epochs, batch_size, peak_lr, clip_norm, weight_decay, dropout: Head training recipe
        patience: Early stopping patience in epochs (None disables it)
        min_df, smooth_idf: Topic signature settings
        ratios: Split fractions
        seeds: Split seeds
        host, port: HTTP service address
        log_level: Logging level name for the command line
    """

    registry_root: str = field(default_factory=lambda: os.getenv("EUROVOC_REGISTRY", "models"))
    default_language: str = field(default_factory=lambda: os.getenv("EUROVOC_LANGUAGE", "en"))
    num_labels: int = field(default_factory=lambda: int(os.getenv("EUROVOC_NUM_LABELS", "6")))
    level: str = field(default_factory=lambda: os.getenv("EUROVOC_LEVEL", "ID"))
    aggregation: str = field(default_factory=lambda: os.getenv("EUROVOC_AGGREGATION", "max"))
    lowercase: bool = field(default_factory=lambda: os.getenv("EUROVOC_LOWERCASE", "false").lower() == "true")
    max_sequence: int = field(default_factory=lambda: int(os.getenv("EUROVOC_MAX_SEQUENCE", "512")))
    epochs: int = field(default_factory=lambda: int(os.getenv("EUROVOC_EPOCHS", "30")))
    batch_size: int = field(default_factory=lambda: int(os.getenv("EUROVOC_BATCH_SIZE", "8")))
    peak_lr: float = field(default_factory=lambda: float(os.getenv("EUROVOC_PEAK_LR", "6e-5")))
    clip_norm: float = field(default_factory=lambda: float(os.getenv("EUROVOC_CLIP_NORM", "5.0")))
    weight_decay: float = field(default_factory=lambda: float(os.getenv("EUROVOC_WEIGHT_DECAY", "0.01")))
    dropout: float = field(default_factory=lambda: float(os.getenv("EUROVOC_DROPOUT", "0.1")))
    patience: Optional[int] = field(
        default_factory=lambda: int(os.environ["EUROVOC_PATIENCE"]) if os.getenv("EUROVOC_PATIENCE") else None
    )
    min_df: int = field(default_factory=lambda: int(os.getenv("EUROVOC_MIN_DF", "2")))
    smooth_idf: bool = field(default_factory=lambda: os.getenv("EUROVOC_SMOOTH_IDF", "true").lower() == "true")
    ratios: Tuple[float, ...] = field(default_factory=lambda: _env_tuple("EUROVOC_RATIOS", "0.8,0.1,0.1", float))
    seeds: Tuple[int, ...] = field(default_factory=lambda: _env_tuple("EUROVOC_SEEDS", "1,2,3,4,5", int))
    host: str = field(default_factory=lambda: os.getenv("EUROVOC_HOST", "127.0.0.1"))
    port: int = field(default_factory=lambda: int(os.getenv("EUROVOC_PORT", "8080")))
    log_level: str = field(default_factory=lambda: os.getenv("EUROVOC_LOG_LEVEL", "INFO"))

    @classmethod
    def from_env(cls) -> "Config":
        """Create config from environment variables."""
        return cls()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Config":
        """Create config from dictionary. Unknown keys are ignored."""
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        for key in ("ratios", "seeds"):
            if isinstance(known.get(key), str):
                cast = float if key == "ratios" else int
                known[key] = tuple(cast(p) for p in known[key].split(","))
            elif key in known:
                known[key] = tuple(known[key])
        return cls(**known)

    @classmethod
    def load_from_file(cls, path: str) -> "Config":
        """Load config from a JSON, YAML or TOML file."""
        if not os.path.exists(path):
            raise FileNotFoundError(f"Config file not found: {path}")

        if path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        elif path.endswith((".yaml", ".yml")):
            if yaml is None:
                raise ImportError("PyYAML is required for YAML config support")
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        elif path.endswith(".toml"):
            if tomllib is None:
                raise ImportError("TOML config files need Python 3.11 or newer")
            with open(path, "rb") as f:
                data = tomllib.load(f)
        else:
            raise ValueError("Unsupported config file format. Use .json, .yaml or .toml")

        # TOML files may group settings under a [eurovoc] table
        if isinstance(data.get("eurovoc"), dict):
            data = {**data, **data["eurovoc"]}
        return cls.from_dict(data)

    def merged(self, **overrides: Any) -> "Config":
        """Return a copy with the non-None overrides applied."""
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return type(self).from_dict(values)

    def train_config(self, seed: int = 0):
        """Build the head training configuration."""
        from .training import TrainConfig

        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            peak_lr=self.peak_lr,
            clip_norm=self.clip_norm,
            weight_decay=self.weight_decay,
            dropout=self.dropout,
            patience=self.patience,
            seed=seed,
        )

    def signature_config(self):
        """Build the topic signature configuration."""
        from .jex import SignatureConfig

        return SignatureConfig(min_df=self.min_df, smooth_idf=self.smooth_idf)
