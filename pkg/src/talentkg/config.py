"""Engine configuration.

A config file is plain key=value lines ('#' starts a comment). Every key
has a default; unknown keys are an error so typos fail fast at startup.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import TalentKGError


class ConfigError(TalentKGError):
    """Bad config file or value (CLI exit code 1)."""


@dataclass
class Config:
    # service
    port: int = 8000
    host: str = "127.0.0.1"
    viewport_limit_cap: int = 50000
    viewport_default_limit: int = 5000
    search_limit: int = 10
    path_depth_cap: int = 6
    # recommendation
    top_k_collaborators: int = 30
    top_k_dataset_users: int = 150
    exclusion_depth: int = 1
    # agents
    rerank_pool: int = 25
    rerank_top_n: int = 5
    justify_parallelism: int = 4
    llm_endpoint_env: str = "LLM_ENDPOINT"
    llm_api_key_env: str = "LLM_API_KEY"
    llm_model_a_env: str = "LLM_MODEL_A"
    llm_model_b_env: str = "LLM_MODEL_B"
    # filtering
    min_pubs: int = 2
    active_since: int = 2020
    # layout
    layout_method: str = "neighbor_embedding"
    layout_neighbors: int = 15
    layout_epochs: int = 200
    layout_min_dist: float = 0.1
    size_min: float = 2.0
    size_scale: float = 1.5
    # misc
    seed: int = 42
    embed_seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path: str | Path | None) -> Config:
    cfg = Config()
    if path is None:
        return cfg
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    by_name = {f.name: f for f in fields(Config)}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path.name} line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        f = by_name.get(key)
        if f is None:
            raise ConfigError(f"{path.name} line {lineno}: unknown key '{key}'")
        try:
            if f.type in ("int", int):
                setattr(cfg, key, int(value))
            elif f.type in ("float", float):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
        except ValueError as exc:
            raise ConfigError(f"{path.name} line {lineno}: bad value for '{key}': {value}") from exc
    return cfg
