from dataclasses import dataclass, field

import networkx as nx

from modules.graphalyzer.builder import ProvenanceGraph
from modules.ingest.schemas import LogEvent
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


@dataclass
class Community:
    id: int
    members: frozenset[str]
    events: list[LogEvent] = field(default_factory=list)
    modularity: float = 0.0

    def process_ids(self, graph: ProvenanceGraph) -> list[str]:
        return sorted(m for m in self.members if graph.node_type(m) == "process")


def undirected_projection(graph: ProvenanceGraph) -> nx.Graph:
    """Projection non orientée : les arêtes parallèles deviennent un poids."""
    projection = nx.Graph()
    projection.add_nodes_from(sorted(graph.graph.nodes))
    for u, v in sorted((u, v) for u, v, _ in graph.graph.edges(keys=True)):
        if projection.has_edge(u, v):
            projection[u][v]["weight"] += 1
        else:
            projection.add_edge(u, v, weight=1)
    return projection


def partition_modularity(projection: nx.Graph, partition) -> float:
    # Q = 0 par convention pour un graphe sans arête
    if projection.size(weight="weight") == 0:
        return 0.0
    return nx.community.modularity(projection, partition, weight="weight")


def detect_communities(
    reduced: ProvenanceGraph, seed: int = 42, restarts: int = 4
) -> list[Community]:
    """Louvain sur la projection pondérée ; meilleure partition sur quelques graines."""
    if reduced.number_of_nodes() == 0:
        return []
    projection = undirected_projection(reduced)

    best, best_q = None, None
    for attempt in range(max(1, restarts)):
        partition = nx.community.louvain_communities(
            projection, weight="weight", seed=seed + attempt
        )
        q = partition_modularity(projection, partition)
        if best_q is None or q > best_q + 1e-12:
            best, best_q = partition, q

    ordered = sorted((sorted(c) for c in best), key=lambda members: members[0])
    communities = []
    for index, members in enumerate(ordered):
        induced = reduced.graph.subgraph(members)
        events = sorted(
            (d["event"] for _, _, d in induced.edges(data=True)),
            key=lambda e: (e.timestamp, e.as_tuple),
        )
        communities.append(
            Community(id=index, members=frozenset(members), events=events, modularity=best_q)
        )

    logger.debug(f"{len(communities)} communautés, Q={best_q:.4f}")
    return communities
