from dataclasses import dataclass, field
from typing import Sequence

from modules.deviation.lof import LofModel, lof_scores
from modules.ingest.schemas import LogEvent
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


@dataclass(frozen=True)
class AnomalyFlag:
    event: LogEvent
    lof_score: float
    flagged: bool


@dataclass
class LineageSubgraph:
    """Processus anormal, sa lignée à un saut et les objets concernés."""

    process_id: str
    nodes: set[str] = field(default_factory=set)
    events: list[LogEvent] = field(default_factory=list)
    parents: set[str] = field(default_factory=set)
    children: set[str] = field(default_factory=set)


@dataclass
class FilteredGraph:
    subgraphs: dict[str, LineageSubgraph] = field(default_factory=dict)

    @property
    def nodes(self) -> set[str]:
        merged: set[str] = set()
        for sub in self.subgraphs.values():
            merged |= sub.nodes
        return merged

    @property
    def events(self) -> list[LogEvent]:
        # Union des sous-graphes : un événement partagé n'apparaît qu'une fois
        seen: dict[tuple, LogEvent] = {}
        for sub in self.subgraphs.values():
            for event in sub.events:
                seen.setdefault(event.as_tuple, event)
        return sorted(seen.values(), key=lambda e: (e.timestamp, e.as_tuple))

    def is_empty(self) -> bool:
        return not self.subgraphs


def flag_window(
    model: LofModel, events: Sequence[LogEvent], triples: Sequence[tuple]
) -> list[AnomalyFlag]:
    """Un AnomalyFlag par événement ; flagged ssi score > seuil (strict)."""
    if not events:
        return []
    scores = lof_scores(model, triples)
    flags = [
        AnomalyFlag(event=e, lof_score=float(s), flagged=bool(s > model.score_threshold))
        for e, s in zip(events, scores)
    ]
    logger.debug(
        f"{sum(f.flagged for f in flags)}/{len(flags)} événements anormaux"
    )
    return flags


def extract_lineage(
    flags: Sequence[AnomalyFlag], events: Sequence[LogEvent]
) -> FilteredGraph:
    """R = ∪ G_i : processus anormaux et leurs parents/enfants via fork."""
    anomalous: dict[str, list[LogEvent]] = {}
    for flag in flags:
        if flag.flagged:
            anomalous.setdefault(flag.event.process_id, []).append(flag.event)

    forks = [e for e in events if e.event_type == "fork"]
    filtered = FilteredGraph()
    for process_id in sorted(anomalous):
        sub = LineageSubgraph(process_id=process_id, nodes={process_id})
        sub.events.extend(anomalous[process_id])
        sub.nodes.update(e.object_id for e in anomalous[process_id])
        for fork in forks:
            # Parent : le fork dont l'objet est le processus anormal
            if fork.object_id == process_id:
                sub.parents.add(fork.process_id)
                sub.nodes.add(fork.process_id)
                sub.events.append(fork)
            # Enfant : le fork émis par le processus anormal
            elif fork.process_id == process_id:
                sub.children.add(fork.object_id)
                sub.nodes.add(fork.object_id)
                sub.events.append(fork)
        filtered.subgraphs[process_id] = sub

    logger.debug(
        f"Graphe filtré : {len(filtered.subgraphs)} processus anormaux, "
        f"{len(filtered.nodes)} nœuds"
    )
    return filtered
