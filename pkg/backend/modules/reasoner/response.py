from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from modules.graphalyzer.builder import (
    DEFAULT_INTERNAL_CIDRS,
    FILE,
    SOCKET,
    ProvenanceGraph,
    is_external,
    object_type,
    parse_networks,
)
from modules.reasoner.schemas import (
    ALERT_THRESHOLD,
    COMPLETE_THRESHOLD,
    RETAIN_THRESHOLD,
    Alert,
    AnalysisResult,
    AttackEventSet,
)
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


@dataclass
class Response:
    """GenerateAlert(c) + Tag(c) + Trace(c) ; alerte absente sous δ."""

    attack_set: AttackEventSet
    tags: set[str] = field(default_factory=set)
    alert: Alert | None = None


def trace(
    reduced: ProvenanceGraph,
    tagged_processes: Iterable[str],
    score: float,
    window: int = 0,
    set_id: str = "",
) -> AttackEventSet:
    """Fermeture ancêtres ∪ descendants des nœuds marqués dans G_R."""
    closure = set()
    for node in tagged_processes:
        if node not in reduced.graph:
            continue
        closure.add(node)
        closure |= nx.ancestors(reduced.graph, node)
        closure |= nx.descendants(reduced.graph, node)

    attack_set = AttackEventSet(
        id=set_id or f"w{window}",
        score=score,
        created_window=window,
        updated_window=window,
    )
    attack_set.add_events(d["event"] for _, _, d in reduced.graph.subgraph(closure).edges(data=True))
    attack_set.record(window)
    return attack_set


def extract_iocs(events, internal_cidrs=DEFAULT_INTERNAL_CIDRS) -> list[str]:
    """Adresses externes contactées et chemins de fichiers écrits."""
    networks = parse_networks(internal_cidrs)
    iocs = set()
    for event in events:
        kind = object_type(event.event_type)
        if kind == SOCKET and is_external(event.object_data, networks):
            iocs.add(event.object_data)
        elif kind == FILE and event.event_type == "write" and event.object_data:
            iocs.add(event.object_data)
    return sorted(iocs)


def remap_kill_chain(kill_chain: dict[str, list[int]], chain, events) -> dict[str, list[int]]:
    """Réindexe la kill chain d'une chaîne vers les événements d'un ensemble."""
    position = {e.as_tuple: index for index, e in enumerate(events)}
    remapped = {}
    for stage, indexes in kill_chain.items():
        mapped = sorted({position[chain[i].as_tuple] for i in indexes if chain[i].as_tuple in position})
        if mapped:
            remapped[stage] = mapped
    return remapped


def generate_alert(
    attack_set: AttackEventSet, window: int, internal_cidrs=DEFAULT_INTERNAL_CIDRS
) -> Alert:
    kind = "complete" if attack_set.score >= COMPLETE_THRESHOLD else "partial"
    return Alert(
        id=f"{attack_set.id}-w{window}",
        window=window,
        set_id=attack_set.id,
        confidence=attack_set.score,
        kind=kind,
        description=attack_set.summary,
        processes=sorted(attack_set.process_ids),
        events=list(attack_set.events),
        kill_chain=attack_set.kill_chain,
        iocs=extract_iocs(attack_set.events, internal_cidrs),
    )


def assemble_response(
    result: AnalysisResult,
    reduced: ProvenanceGraph,
    alert_threshold: float = ALERT_THRESHOLD,
    window: int = 0,
    internal_cidrs=DEFAULT_INTERNAL_CIDRS,
) -> Response | None:
    if result.score < RETAIN_THRESHOLD:
        logger.debug(f"Communauté {result.community_id} écartée (σ_a={result.score:.2f})")
        return None

    attack_set = trace(
        reduced, result.tagged_processes, result.score, window, f"w{window}-c{result.community_id}"
    )
    attack_set.summary = result.summary
    attack_set.kill_chain = remap_kill_chain(result.kill_chain, result.attack_chain, attack_set.events)

    response = Response(attack_set=attack_set, tags=set(result.tagged_processes))
    if result.score >= alert_threshold:
        response.alert = generate_alert(attack_set, window, internal_cidrs)
    return response
