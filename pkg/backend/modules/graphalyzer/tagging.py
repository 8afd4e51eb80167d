import heapq
import math
from dataclasses import dataclass, field

from modules.graphalyzer.builder import SOCKET, ProvenanceGraph
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()


@dataclass
class TagMap:
    """T(v) : nœuds marqués, avec le point d'infection qui les a marqués."""

    taint_time: dict[str, float] = field(default_factory=dict)
    origin: dict[str, str] = field(default_factory=dict)

    @property
    def tagged(self) -> set[str]:
        return set(self.taint_time)

    def __call__(self, node: str) -> int:
        return 1 if node in self.taint_time else 0


def relays_data(graph: ProvenanceGraph, node: str, tags: TagMap) -> bool:
    """Vrai si le nœud émet des données après sa première réception marquée."""
    since = tags.taint_time.get(node)
    if since is None:
        return False
    return any(
        data["timestamp"] >= since for _, _, data in graph.graph.out_edges(node, data=True)
    )


def propagate_tags(
    graph: ProvenanceGraph, infection_points, causal: bool = True
) -> TagMap:
    """Propagation depuis les points d'infection le long du flux de données.

    Un socket atteint est marqué mais ne propage pas. En mode causal, une
    arête ne transmet le marquage que si son horodatage est postérieur ou
    égal à la première arrivée marquée sur sa source.
    """
    tags = TagMap()
    heap: list[tuple[float, str]] = []
    for point in sorted(infection_points):
        tags.taint_time[point] = -math.inf
        tags.origin[point] = point
        heap.append((-math.inf, point))
    heapq.heapify(heap)

    while heap:
        arrival, node = heapq.heappop(heap)
        if arrival > tags.taint_time[node]:
            continue
        if graph.node_type(node) == SOCKET and node not in infection_points:
            continue
        for _, target, data in sorted(
            graph.graph.out_edges(node, data=True), key=lambda edge: (edge[2]["timestamp"], edge[1])
        ):
            ts = data["timestamp"]
            if causal and ts < arrival:
                continue
            reached = ts if causal else -math.inf
            if target not in tags.taint_time or reached < tags.taint_time[target]:
                tags.taint_time[target] = reached
                tags.origin[target] = tags.origin[node]
                heapq.heappush(heap, (reached, target))

    logger.debug(
        f"{len(tags.taint_time)}/{graph.number_of_nodes()} nœuds marqués "
        f"depuis {len(infection_points)} points d'infection"
    )
    return tags


def prune(graph: ProvenanceGraph, tags: TagMap) -> ProvenanceGraph:
    """G_R : restriction aux nœuds marqués (et aux arêtes entre eux)."""
    reduced = graph.subgraph(n for n in graph.graph.nodes if tags(n))
    logger.debug(
        f"Graphe réduit : {reduced.number_of_nodes()} nœuds, "
        f"{reduced.number_of_edges()} arêtes"
    )
    return reduced
