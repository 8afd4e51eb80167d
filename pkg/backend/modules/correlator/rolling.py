from typing import Iterable

from pydantic import BaseModel, Field

from modules.correlator.store import GlobalAttackStore
from modules.graphalyzer.builder import DIRECTION, ProvenanceGraph
from modules.ingest.schemas import LogEvent
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


class RollingPolicy(BaseModel):
    horizon: int = Field(1, ge=1)  # r, en fenêtres
    retention: int = Field(8, ge=1)
    max_nodes: int = Field(50_000, ge=1)


class RollingProvenanceGraph:
    """Graphe de provenance glissant : nœuds datés par dernière fenêtre vue."""

    def __init__(self):
        self.graph = ProvenanceGraph()
        self.last_seen: dict[str, int] = {}
        self._tuples: set[tuple[str, str, str, int]] = set()

    def add_events(self, events: Iterable[LogEvent], window: int) -> None:
        for event in events:
            if event.event_type not in DIRECTION:
                continue
            if event.as_tuple not in self._tuples:
                self._tuples.add(event.as_tuple)
                self.graph.add_event(event)
            self.last_seen[event.process_id] = window
            self.last_seen[event.object_id] = window

    def remove_nodes(self, nodes: Iterable[str]) -> None:
        nodes = [n for n in nodes if n in self.graph.graph]
        for _, _, data in self.graph.graph.edges(nodes, data=True):
            self._tuples.discard(data["event"].as_tuple)
        for _, _, data in self.graph.graph.in_edges(nodes, data=True):
            self._tuples.discard(data["event"].as_tuple)
        self.graph.graph.remove_nodes_from(nodes)
        for node in nodes:
            self.last_seen.pop(node, None)

    def events(self) -> list[LogEvent]:
        """Événements retenus, réinjectés dans le graphe de la fenêtre suivante."""
        return self.graph.events()

    def number_of_nodes(self) -> int:
        return self.graph.number_of_nodes()


def prune_rolling_graph(
    rolling: RollingProvenanceGraph,
    store: GlobalAttackStore,
    window: int,
    policy: RollingPolicy | None = None,
) -> RollingProvenanceGraph:
    """Retire les nœuds non marqués après r fenêtres et les nœuds marqués à échéance.

    Les événements des nœuds retirés restent dans les tuples des ensembles.
    """
    policy = policy or RollingPolicy()
    owners: dict[str, list] = {}
    for attack_set in store.active_sets():
        for node in attack_set.node_ids:
            owners.setdefault(node, []).append(attack_set)

    stale = []
    for node, seen in rolling.last_seen.items():
        sets = owners.get(node)
        if not sets:
            if seen <= window - policy.horizon:
                stale.append(node)
        elif any(window - s.created_window >= policy.retention for s in sets):
            stale.append(node)
    rolling.remove_nodes(stale)

    excess = rolling.number_of_nodes() - policy.max_nodes
    if excess > 0:
        oldest = sorted(rolling.last_seen, key=lambda n: (rolling.last_seen[n], n))[:excess]
        rolling.remove_nodes(oldest)
        logger.warning(f"Plafond du graphe glissant atteint : {excess} nœud(s) évincé(s)")

    logger.debug(
        f"Graphe glissant après fenêtre {window} : {rolling.number_of_nodes()} nœuds "
        f"({len(stale)} retirés)"
    )
    return rolling
