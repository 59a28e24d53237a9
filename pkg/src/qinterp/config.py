"""Engine configuration: settings schema and config.yaml loader"""

import os
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field


CONFIG_FILE = "config.yaml"
ENV_PREFIX = "QINTERP_"


class Settings(BaseModel):
    app_name:         str = "qinterp"
    kb:               str = Field(default="fixtures/tiny_kb", description="Snapshot dir or raw source dir")
    threshold:        float = Field(default=0.66, gt=0, le=1, description="Skeleton score-ratio threshold")
    depth:            int = Field(default=150, ge=0, description="Fuzzy lookup depth; 0 disables")
    alpha:            float = Field(default=1.0, ge=0, le=1, description="Commonness weight")
    beta:             float = Field(default=1.0, ge=0, le=1, description="Relatedness weight")
    gamma:            float = Field(default=1.0, ge=0, le=1, description="Context weight")
    max_combinations: int = Field(default=10_000, ge=1, description="Cartesian cap per skeleton")
    max_terms:        int = Field(default=16, ge=1, le=20, description="Max query length in terms")
    top_k:            int = Field(default=0, ge=0, description="Max interpretations returned; 0 = all")
    min_grade:        int = Field(default=2, ge=1, le=3, description="Min gold grade for evaluation")
    weighting:        str = Field(default="wiki", pattern="^(wiki|frequency)$", description="Segment weights")
    parallel:         bool = Field(default=True, description="Run segmentation and linking concurrently")
    seed:             int = Field(default=42, description="Split random seed")
    ratio:            float = Field(default=0.8, gt=0, lt=1, description="Target train share")
    error_threshold:  float = Field(default=0.05, ge=0, description="Split error to stop at")
    max_iters:        int = Field(default=100_000, ge=0, description="Split hill-climbing budget")
    address:          str = Field(default="127.0.0.1:8080", pattern=r"^[^:]+:\d+$", description="host:port")
    log_level:        str = Field(default="WARNING", description="Logging level for stderr diagnostics")


def load_config(overrides: dict[str, Any] | None = None) -> Settings:
    """Load Settings from config.yaml, then QINTERP_<FIELD> env vars, then non-None CLI overrides."""
    data: dict[str, Any] = {}
    if Path(CONFIG_FILE).exists():
        try:
            data = yaml.safe_load(Path(CONFIG_FILE).read_text()) or {}
        except yaml.YAMLError as e:
            raise ValueError(f"Invalid {CONFIG_FILE}: {e}") from e

    for name in Settings.model_fields:
        if val := os.getenv(f"{ENV_PREFIX}{name.upper()}"):
            data[name] = val

    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**data)
