import json
import re
from pathlib import Path
from typing import Sequence

import toml
from pydantic import BaseModel, Field, ValidationError, field_validator

from modules.errors import RulesError
from modules.ingest.schemas import LogEvent
from modules.reasoner.base import ReasonerBackend, chain_processes
from modules.reasoner.schemas import KILL_CHAIN_STAGES, ChainVerdict
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()

DEFAULT_RULES_PATH = Path(__file__).resolve().parent / "rules" / "default_rules.json"


def _compile(pattern: str) -> str:
    try:
        re.compile(pattern)
    except re.error as e:
        raise ValueError(f"motif invalide '{pattern}' : {e}")
    return pattern


class StageSignature(BaseModel):
    stage: str
    event_types: list[str]
    process_pattern: str | None = None
    object_pattern: str | None = None

    @field_validator("stage")
    @classmethod
    def known_stage(cls, value):
        if value not in KILL_CHAIN_STAGES:
            raise ValueError(f"étape inconnue : {value}")
        return value

    @field_validator("process_pattern", "object_pattern")
    @classmethod
    def valid_pattern(cls, value):
        return None if value is None else _compile(value)

    def matches(self, event: LogEvent) -> bool:
        if event.event_type not in self.event_types:
            return False
        if self.process_pattern and not re.search(self.process_pattern, event.process_name):
            return False
        if self.object_pattern and not re.search(self.object_pattern, event.object_data):
            return False
        return True


class Scoring(BaseModel):
    base: float = Field(0.7, ge=0, le=1)
    per_stage: float = Field(0.05, ge=0, le=1)
    cap: float = Field(0.95, ge=0, le=1)
    corroboration_bonus: float = Field(0.0, ge=0, le=1)
    burst_gap_minutes: int = Field(120, gt=0)


class StubRules(BaseModel):
    version: int = 1
    suspicious_names: list[str] = Field(default_factory=list)
    forbidden_write_paths: list[str] = Field(default_factory=list)
    stages: list[StageSignature]
    scoring: Scoring = Field(default_factory=Scoring)

    @field_validator("suspicious_names", "forbidden_write_paths")
    @classmethod
    def valid_patterns(cls, values):
        return [_compile(v) for v in values]


def load_rules(path=None) -> StubRules:
    path = Path(path or DEFAULT_RULES_PATH)
    try:
        text = path.read_text(encoding="utf-8")
        data = toml.loads(text) if path.suffix == ".toml" else json.loads(text)
        return StubRules.model_validate(data)
    except (OSError, ValueError, ValidationError, toml.TomlDecodeError) as e:
        logger.error(f"Fichier de règles invalide {path} : {e}")
        raise RulesError(f"règles invalides ({path}) : {e}") from e


class StubBackend(ReasonerBackend):
    """Raisonneur déterministe à base de règles déclaratives."""

    name = "stub"

    def __init__(self, rules: StubRules):
        self.rules = rules

    def _stages(self, event: LogEvent) -> list[str]:
        return [s.stage for s in self.rules.stages if s.matches(event)]

    def _forbidden_write(self, event: LogEvent) -> bool:
        return event.event_type == "write" and any(
            re.search(p, event.object_data) for p in self.rules.forbidden_write_paths
        )

    def check_known_behavior(self, logs: Sequence[LogEvent]) -> list[str]:
        suspicious = set()
        for event in logs:
            if self._stages(event) or self._forbidden_write(event):
                suspicious.add(event.process_id)
            elif any(re.search(p, event.process_name) for p in self.rules.suspicious_names):
                suspicious.add(event.process_id)
        return sorted(suspicious)

    def analyze_behavior(self, process_logs: Sequence[LogEvent]) -> str:
        findings = []
        for event in sorted(process_logs, key=lambda e: e.timestamp):
            for stage in self._stages(event):
                findings.append(f"{stage}: {event.event_type} {event.object_data}")
            if self._forbidden_write(event):
                findings.append(f"écriture interdite : {event.object_data}")
        return "; ".join(dict.fromkeys(findings))

    def analyze_chain(self, chain: Sequence[LogEvent]) -> ChainVerdict:
        kill_chain: dict[str, list[int]] = {}
        for index, event in enumerate(chain):
            for stage in self._stages(event):
                kill_chain.setdefault(stage, []).append(index)

        scoring = self.rules.scoring
        score = scoring.base + scoring.per_stage * len(kill_chain)
        gap_ns = scoring.burst_gap_minutes * 60 * 10**9
        stamps = [e.timestamp for e in chain]
        # Deux rafales éloignées dans le temps se corroborent
        if any(b - a > gap_ns for a, b in zip(stamps, stamps[1:])):
            score += scoring.corroboration_bonus
        score = round(min(score, scoring.cap), 4)

        stages = [s for s in KILL_CHAIN_STAGES if s in kill_chain]
        tagged = sorted(chain_processes(chain))
        summary = (
            f"Chaîne de {len(chain)} événements couvrant "
            f"{len(stages)} étape(s) ({', '.join(stages) or 'aucune'}) ; "
            f"processus : {', '.join(tagged)}"
        )
        return ChainVerdict(
            score=score,
            summary=summary,
            tagged_processes=tagged,
            kill_chain={s: kill_chain[s] for s in stages},
        )


def stub_backend(rules_path=None) -> StubBackend:
    return StubBackend(load_rules(rules_path))
