import ipaddress
import os
from pathlib import Path
from typing import Iterable, Literal

import toml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from modules.errors import ConfigError
from modules.graphalyzer.builder import DEFAULT_INTERNAL_CIDRS
from modules.ingest.schemas import DEFAULT_EVENT_TYPES
from modules.ingest.windows import MINUTE_NS

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent.parent
DEFAULT_CONFIG_PATH = BASE_DIR / "config" / "default.toml"


class WindowingConfig(BaseModel):
    length_minutes: int = Field(30, gt=0)
    step_minutes: int = Field(15, gt=0)

    @model_validator(mode="after")
    def step_within_length(self):
        if self.step_minutes > self.length_minutes:
            raise ValueError("le pas ne peut pas dépasser la longueur de fenêtre")
        return self

    @property
    def length_ns(self) -> int:
        return self.length_minutes * MINUTE_NS

    @property
    def step_ns(self) -> int:
        return self.step_minutes * MINUTE_NS


class IngestConfig(BaseModel):
    strict: bool = False
    event_types: list[str] = Field(default_factory=lambda: list(DEFAULT_EVENT_TYPES), min_length=1)
    # Type absent de la table de direction du graphe : ignoré ou fatal
    unknown_event: Literal["skip", "abort"] = "skip"

    @property
    def skip_unknown(self) -> bool:
        return self.unknown_event == "skip"


class DeviationConfig(BaseModel):
    k: int = Field(20, ge=1)
    contamination: float = Field(0.1, gt=0.0, lt=1.0)
    model_path: str = "model/baseline.json"
    train_until: int | None = None


class GraphConfig(BaseModel):
    internal_cidrs: list[str] = Field(default_factory=lambda: list(DEFAULT_INTERNAL_CIDRS))
    causal_tags: bool = True
    louvain_restarts: int = Field(4, ge=1)

    @field_validator("internal_cidrs")
    @classmethod
    def valid_cidrs(cls, values):
        for value in values:
            try:
                ipaddress.ip_network(value, strict=False)
            except ValueError:
                raise ValueError(f"CIDR invalide : {value}")
        return values


class ReasonerConfig(BaseModel):
    backend: Literal["stub", "remote"] = "stub"
    rules_path: str | None = None
    endpoint: str | None = None
    model: str | None = None
    api_key: str | None = None
    prompts_dir: str | None = None
    timeout: float = Field(60.0, gt=0)
    max_attempts: int = Field(3, ge=1)
    max_in_flight: int = Field(4, ge=1)
    workers: int = Field(1, ge=1)
    alert_threshold: float = Field(0.8, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def remote_needs_endpoint(self):
        if self.backend == "remote" and not (self.endpoint and self.model):
            raise ValueError("le raisonneur distant exige endpoint et model")
        return self


class CorrelatorConfig(BaseModel):
    decay_rate: float = Field(0.025, ge=0.0, le=1.0)
    reanalysis_cadence: int = Field(2, ge=1)
    merge_on_objects: bool = False
    horizon: int = Field(1, ge=1)
    retention: int = Field(8, ge=1)
    max_nodes: int = Field(50_000, ge=1)


class PipelineConfig(BaseModel):
    seed: int = 42
    output_dir: str = "out"
    ingest: IngestConfig = Field(default_factory=IngestConfig)
    windowing: WindowingConfig = Field(default_factory=WindowingConfig)
    deviation: DeviationConfig = Field(default_factory=DeviationConfig)
    graph: GraphConfig = Field(default_factory=GraphConfig)
    reasoner: ReasonerConfig = Field(default_factory=ReasonerConfig)
    correlator: CorrelatorConfig = Field(default_factory=CorrelatorConfig)


def _merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def read_toml(path, seen=None) -> dict:
    """Lit un fichier TOML ; la clé `include` désigne des valeurs par défaut."""
    path = Path(path).resolve()
    seen = seen or set()
    if path in seen:
        raise ConfigError(f"inclusion circulaire : {path}")
    try:
        data = toml.load(path)
    except FileNotFoundError:
        raise ConfigError(f"fichier de configuration introuvable : {path}")
    except toml.TomlDecodeError as e:
        raise ConfigError(f"configuration illisible ({path}) : {e}")
    include = data.pop("include", None)
    if include:
        base = read_toml(path.parent / include, seen | {path})
        data = _merge(base, data)
    return data


def parse_override(item: str) -> tuple[list[str], object]:
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"surcharge invalide '{item}' (attendu section.clé=valeur)")
    try:
        value = toml.loads(f"v = {raw.strip()}")["v"]
    except toml.TomlDecodeError:
        value = raw.strip()
    return key.strip().split("."), value


def apply_overrides(data: dict, overrides: Iterable[str]) -> dict:
    data = dict(data)
    for item in overrides:
        keys, value = parse_override(item)
        node = data
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"surcharge invalide '{item}'")
        node[keys[-1]] = value
    return data


def _apply_env(data: dict) -> dict:
    reasoner = data.setdefault("reasoner", {})
    for key, env in (
        ("endpoint", "REASONER_ENDPOINT"),
        ("api_key", "REASONER_API_KEY"),
        ("model", "REASONER_MODEL"),
    ):
        if not reasoner.get(key) and os.getenv(env):
            reasoner[key] = os.getenv(env)
    return data


def load_config(path=None, overrides: Iterable[str] = ()) -> PipelineConfig:
    data = read_toml(path) if path else {}
    data = _apply_env(apply_overrides(data, overrides))
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"configuration invalide : {e}") from e
