from pydantic import BaseModel, Field, computed_field, field_validator, model_validator

from modules.ingest.schemas import LogEvent

KILL_CHAIN_STAGES = ("delivery", "exploitation", "installation", "c2", "exfiltration")

# Bandes de confiance σ_a
RETAIN_THRESHOLD = 0.7
ALERT_THRESHOLD = 0.8
COMPLETE_THRESHOLD = 0.9


def queue_for(score: float, alert_threshold: float = ALERT_THRESHOLD) -> str:
    if score >= alert_threshold:
        return "primary"
    if score >= RETAIN_THRESHOLD:
        return "secondary"
    return "retired"


class ChainVerdict(BaseModel):
    """Réponse de AnalyzeChain : score, résumé et processus marqués."""

    score: float = Field(ge=0.0, le=1.0)
    summary: str
    tagged_processes: list[str]
    kill_chain: dict[str, list[int]] = Field(default_factory=dict)

    @field_validator("kill_chain")
    @classmethod
    def known_stages(cls, value):
        unknown = set(value) - set(KILL_CHAIN_STAGES)
        if unknown:
            raise ValueError(f"étapes inconnues : {sorted(unknown)}")
        return value


class AnalysisResult(BaseModel):
    community_id: int
    score: float = Field(ge=0.0, le=1.0)
    summary: str
    tagged_processes: list[str]
    temporal_patterns: dict[str, str]
    attack_chain: list[LogEvent]
    kill_chain: dict[str, list[int]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def tagged_when_confident(self):
        if self.score >= RETAIN_THRESHOLD and not self.tagged_processes:
            raise ValueError("un résultat ≥ 0.7 doit marquer au moins un processus")
        return self


class Alert(BaseModel):
    id: str
    window: int
    set_id: str
    confidence: float
    kind: str  # "partial" ou "complete"
    description: str
    processes: list[str]
    events: list[LogEvent]
    kill_chain: dict[str, list[int]]
    iocs: list[str]

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True)


class AttackEventSet(BaseModel):
    """Ensemble T de tuples (p, e, o, t) suivi d'une fenêtre à l'autre."""

    id: str
    events: list[LogEvent] = Field(default_factory=list)
    score: float = Field(ge=0.0, le=1.0)
    created_window: int
    updated_window: int
    history: list[tuple[int, float]] = Field(default_factory=list)
    benign_windows: int = 0
    alerted_score: float | None = None
    needs_reanalysis: bool = False
    last_seen_ts: int = 0
    summary: str = ""
    kill_chain: dict[str, list[int]] = Field(default_factory=dict)

    @computed_field
    @property
    def queue(self) -> str:
        return queue_for(self.score)

    @property
    def tuples(self) -> set[tuple[str, str, str, int]]:
        return {e.as_tuple for e in self.events}

    @property
    def process_ids(self) -> set[str]:
        processes = {e.process_id for e in self.events}
        processes |= {e.object_id for e in self.events if e.event_type == "fork"}
        return processes

    @property
    def object_ids(self) -> set[str]:
        return {e.object_id for e in self.events if e.event_type != "fork"}

    @property
    def node_ids(self) -> set[str]:
        return self.process_ids | self.object_ids

    def add_events(self, events) -> None:
        known = {e.as_tuple: e for e in self.events}
        for event in events:
            known.setdefault(event.as_tuple, event)
        self.events = sorted(known.values(), key=lambda e: (e.timestamp, e.as_tuple))
        if self.events:
            self.last_seen_ts = max(self.last_seen_ts, self.events[-1].timestamp)

    def record(self, window: int) -> None:
        # Historique strictement croissant : on remplace l'entrée de la fenêtre courante
        if self.history and self.history[-1][0] == window:
            self.history[-1] = (window, self.score)
        else:
            self.history.append((window, self.score))
        self.updated_window = max(self.updated_window, window)
