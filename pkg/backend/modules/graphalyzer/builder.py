import ipaddress
from typing import Iterable

import networkx as nx

from modules.deviation.lineage import FilteredGraph
from modules.errors import UnknownEventTypeError
from modules.ingest.schemas import LogEvent
from utils.logger_config import configure_logger

# Configuration du logger
logger = configure_logger()

PROCESS = "process"
FILE = "file"
SOCKET = "socket"

# Sens du flux de données : True = objet → processus
INBOUND = {"recv": True, "read": True, "accept": True}
OUTBOUND = {"send": False, "write": False, "connect": False, "fork": False, "exec": False}
DIRECTION = {**INBOUND, **OUTBOUND}

SOCKET_EVENTS = {"recv", "send", "accept", "connect"}

DEFAULT_INTERNAL_CIDRS = ("10.0.0.0/8", "172.16.0.0/12", "192.168.0.0/16", "127.0.0.0/8")


def object_type(event_type: str) -> str:
    if event_type == "fork":
        return PROCESS
    if event_type in SOCKET_EVENTS:
        return SOCKET
    return FILE


class ProvenanceGraph:
    """Multigraphe orienté typé : processus, fichiers, sockets."""

    def __init__(self, graph: nx.MultiDiGraph | None = None):
        self.graph = graph if graph is not None else nx.MultiDiGraph()

    def add_node(self, node_id: str, node_type: str, data: str = "") -> None:
        if node_id in self.graph:
            attrs = self.graph.nodes[node_id]
            # Un processus ne devient jamais un objet sous la même clé
            if attrs["node_type"] != PROCESS and node_type == PROCESS:
                attrs["node_type"] = PROCESS
            if data and not attrs.get("data"):
                attrs["data"] = data
            return
        self.graph.add_node(node_id, node_type=node_type, data=data)

    def add_event(self, event: LogEvent) -> None:
        inbound = DIRECTION[event.event_type]
        self.add_node(event.process_id, PROCESS, event.process_name)
        obj_type = object_type(event.event_type)
        if self.graph.has_node(event.object_id) and self.node_type(event.object_id) == PROCESS:
            obj_type = PROCESS
        self.add_node(event.object_id, obj_type, event.object_data)
        src, dst = (
            (event.object_id, event.process_id)
            if inbound
            else (event.process_id, event.object_id)
        )
        self.graph.add_edge(
            src, dst, event_type=event.event_type, timestamp=event.timestamp, event=event
        )

    def node_type(self, node_id: str) -> str:
        return self.graph.nodes[node_id]["node_type"]

    def node_data(self, node_id: str) -> str:
        return self.graph.nodes[node_id].get("data", "")

    def nodes(self) -> list[str]:
        return sorted(self.graph.nodes)

    def events(self) -> list[LogEvent]:
        return sorted(
            (d["event"] for _, _, d in self.graph.edges(data=True)),
            key=lambda e: (e.timestamp, e.as_tuple),
        )

    def subgraph(self, nodes: Iterable[str]) -> "ProvenanceGraph":
        return ProvenanceGraph(self.graph.subgraph(nodes).copy())

    def number_of_nodes(self) -> int:
        return self.graph.number_of_nodes()

    def number_of_edges(self) -> int:
        return self.graph.number_of_edges()


def build_graph(filtered, skip_unknown: bool = True) -> ProvenanceGraph:
    """Un nœud par identifiant, une arête par événement, orientée par le flux."""
    events = filtered.events if isinstance(filtered, FilteredGraph) else filtered
    graph = ProvenanceGraph()
    for event in events:
        if event.event_type not in DIRECTION:
            if not skip_unknown:
                raise UnknownEventTypeError(event.event_type)
            logger.warning(f"Type d'événement ignoré : {event.event_type}")
            continue
        graph.add_event(event)
    return graph


def _host(address: str) -> str:
    if address.startswith("["):
        return address[1:].split("]")[0]
    if address.count(":") == 1:
        return address.split(":")[0]
    return address


def is_external(address: str, internal_networks) -> bool:
    """Adresse hors des CIDR internes ; une adresse illisible est externe."""
    host = _host(address)
    try:
        ip = ipaddress.ip_address(host)
    except ValueError:
        return True
    if ip.is_loopback:
        return False
    return not any(ip in network for network in internal_networks)


def parse_networks(cidrs: Iterable[str]):
    return [ipaddress.ip_network(c, strict=False) for c in cidrs]


def find_infection_points(
    graph: ProvenanceGraph, internal_cidrs: Iterable[str] = DEFAULT_INTERNAL_CIDRS
) -> set[str]:
    """Sockets externes alimentant au moins un processus."""
    networks = parse_networks(internal_cidrs)
    points = set()
    for node, attrs in graph.graph.nodes(data=True):
        if attrs["node_type"] != SOCKET:
            continue
        feeds_process = any(
            graph.node_type(dst) == PROCESS for _, dst in graph.graph.out_edges(node)
        )
        if feeds_process and is_external(attrs.get("data", ""), networks):
            points.add(node)
    return points
