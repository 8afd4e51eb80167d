import json

import numpy as np
import pytest

from modules.errors import UnknownEventTypeError
from modules.graphalyzer.builder import (
    FILE,
    PROCESS,
    SOCKET,
    ProvenanceGraph,
    build_graph,
    find_infection_points,
    is_external,
    parse_networks,
)
from modules.graphalyzer.communities import (
    detect_communities,
    partition_modularity,
    undirected_projection,
)
from modules.graphalyzer.export import communities_json, edge_list_lines, write_edge_list
from modules.graphalyzer.tagging import prune, propagate_tags, relays_data
from tests.conftest import ev
from tests.oracles import best_modularity, relay_tags

INTRUSION_TAGGED = {"O1", "S1", "O2", "S2", "O6", "O8", "S3", "O9"}
INTRUSION_PRUNED = {"O3", "O4", "O5", "O7", "O10"}


@pytest.mark.parametrize(
    "event, src, dst",
    [
        ("read", "F1", "P1"),
        ("recv", "F1", "P1"),
        ("accept", "F1", "P1"),
        ("write", "P1", "F1"),
        ("send", "P1", "F1"),
        ("connect", "P1", "F1"),
        ("fork", "P1", "F1"),
        ("exec", "P1", "F1"),
    ],
)
def test_edge_direction_follows_data_flow(event, src, dst):
    graph = build_graph([ev("P1", "bash", event, "F1", "x", 1)])
    assert list(graph.graph.edges()) == [(src, dst)]


def test_node_types():
    graph = build_graph(
        [
            ev("P1", "bash", "fork", "P2", "ls", 1),
            ev("P2", "ls", "read", "F1", "/etc/hosts", 2),
            ev("P2", "ls", "connect", "S1", "10.0.0.1:22", 3),
        ]
    )
    assert [graph.node_type(n) for n in ("P1", "P2", "F1", "S1")] == [PROCESS, PROCESS, FILE, SOCKET]


def test_object_becomes_process_when_it_acts():
    graph = build_graph(
        [
            ev("P1", "bash", "write", "P2", "/tmp/x", 1),
            ev("P2", "x", "read", "F1", "/etc/hosts", 2),
        ]
    )
    assert graph.node_type("P2") == PROCESS


def test_unknown_event_type():
    events = [ev("P1", "bash", "mmap", "F1", "/lib/x.so", 1)]
    assert build_graph(events).number_of_edges() == 0
    with pytest.raises(UnknownEventTypeError):
        build_graph(events, skip_unknown=False)


@pytest.mark.parametrize(
    "address, external",
    [
        ("61.130.69.232:80", True),
        ("10.0.0.5:53", False),
        ("192.168.1.3:443", False),
        ("127.0.0.1:8080", False),
        ("[::1]:80", False),
        ("[2001:db8::1]:443", True),
        ("pipe:[1234]", True),
    ],
)
def test_is_external(address, external):
    networks = parse_networks(["10.0.0.0/8", "192.168.0.0/16"])
    assert is_external(address, networks) is external


def test_intrusion_infection_points_and_tags(intrusion_events):
    graph = build_graph(intrusion_events)
    points = find_infection_points(graph)
    assert points == {"O1"}

    tags = propagate_tags(graph, points)
    assert tags.tagged == INTRUSION_TAGGED
    assert set(graph.nodes()) - tags.tagged == INTRUSION_PRUNED
    assert tags.origin["S3"] == "O1"
    # Écriture antérieure à la réception : non marquée en mode causal
    assert "O10" not in tags.tagged
    assert relays_data(graph, "S2", tags)
    assert not relays_data(graph, "O8", tags)

    reduced = prune(graph, tags)
    assert set(reduced.nodes()) == INTRUSION_TAGGED
    assert all(u in INTRUSION_TAGGED and v in INTRUSION_TAGGED for u, v in reduced.graph.edges())


def test_non_causal_tags_earlier_writes(intrusion_events):
    graph = build_graph(intrusion_events)
    tags = propagate_tags(graph, {"O1"}, causal=False)
    assert tags.tagged == INTRUSION_TAGGED | {"O10"}


def test_socket_reached_does_not_propagate():
    graph = build_graph(
        [
            ev("P1", "curl", "recv", "S1", "61.130.69.232:80", 1),
            ev("P1", "curl", "send", "S2", "10.0.0.9:9000", 2),
            ev("P2", "srv", "recv", "S2", "10.0.0.9:9000", 3),
        ]
    )
    tags = propagate_tags(graph, find_infection_points(graph))
    assert tags.tagged == {"S1", "P1", "S2"}


def test_no_infection_points_tags_nothing():
    graph = build_graph([ev("P1", "bash", "read", "F1", "/etc/hosts", 1)])
    assert find_infection_points(graph) == set()
    assert prune(graph, propagate_tags(graph, set())).number_of_nodes() == 0


def _random_events(rng, n_events):
    processes = [f"P{i}" for i in range(int(rng.integers(2, 7)))]
    files = [f"F{i}" for i in range(int(rng.integers(1, 5)))]
    sockets = [f"S{i}" for i in range(int(rng.integers(1, 4)))]
    events = []
    for _ in range(n_events):
        pid = processes[int(rng.integers(len(processes)))]
        kind = int(rng.integers(3))
        ts = int(rng.integers(1, 50))
        if kind == 0:
            event = ["read", "write"][int(rng.integers(2))]
            events.append(ev(pid, "p", event, files[int(rng.integers(len(files)))], "/f", ts))
        elif kind == 1:
            event = ["recv", "send", "connect", "accept"][int(rng.integers(4))]
            events.append(ev(pid, "p", event, sockets[int(rng.integers(len(sockets)))], "1.2.3.4:5", ts))
        else:
            child = processes[int(rng.integers(len(processes)))]
            if child != pid:
                events.append(ev(pid, "p", "fork", child, "p", ts))
    return events


@pytest.mark.parametrize("causal", [True, False])
def test_propagation_matches_fixed_point_oracle(causal):
    rng = np.random.default_rng(2024)
    for _ in range(100):
        events = _random_events(rng, int(rng.integers(3, 30)))
        graph = build_graph(events)
        sockets = sorted(n for n in graph.nodes() if graph.node_type(n) == SOCKET)
        points = {s for s in sockets if rng.random() < 0.6}
        edges = [(u, v, d["timestamp"]) for u, v, d in graph.graph.edges(data=True)]
        node_types = {n: graph.node_type(n) for n in graph.nodes()}
        expected = relay_tags(edges, node_types, points, causal=causal)
        assert propagate_tags(graph, points, causal=causal).tagged == expected


def _clique_events():
    edges = [("P1", "P2"), ("P2", "P3"), ("P1", "P3"), ("P4", "P5"), ("P5", "P6"), ("P4", "P6"), ("P3", "P4")]
    return [ev(u, "p", "fork", v, "p", i + 1) for i, (u, v) in enumerate(edges)]


def test_two_cliques_give_two_communities():
    communities = detect_communities(build_graph(_clique_events()), seed=42)
    assert [sorted(c.members) for c in communities] == [["P1", "P2", "P3"], ["P4", "P5", "P6"]]
    assert [c.id for c in communities] == [0, 1]
    assert communities[0].modularity == pytest.approx(2 * (3 / 7 - 0.25))
    assert len(communities[0].events) == 3
    assert communities[1].process_ids(build_graph(_clique_events())) == ["P4", "P5", "P6"]


def test_single_node_community():
    graph = ProvenanceGraph()
    graph.add_node("P1", PROCESS, "bash")
    communities = detect_communities(graph)
    assert len(communities) == 1
    assert communities[0].members == frozenset({"P1"})
    assert communities[0].modularity == 0.0


def test_empty_graph_has_no_communities():
    assert detect_communities(ProvenanceGraph()) == []


def test_parallel_edges_weighted():
    graph = build_graph(
        [
            ev("P1", "bash", "read", "F1", "/a", 1),
            ev("P1", "bash", "read", "F1", "/a", 2),
            ev("P1", "bash", "write", "F1", "/a", 3),
        ]
    )
    projection = undirected_projection(graph)
    assert projection["F1"]["P1"]["weight"] == 3


def test_communities_are_deterministic():
    graph = build_graph(_clique_events())
    first = detect_communities(graph, seed=7)
    second = detect_communities(graph, seed=7)
    assert [c.members for c in first] == [c.members for c in second]


@pytest.mark.parametrize("seed", range(10))
def test_louvain_close_to_exhaustive_optimum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 8))
    nodes = [f"P{i}" for i in range(n)]
    events = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.4:
                events.append(ev(nodes[i], "p", "fork", nodes[j], "p", len(events) + 1))
    graph = build_graph(events)
    if graph.number_of_edges() == 0:
        return
    projection = undirected_projection(graph)
    communities = detect_communities(graph)
    found = partition_modularity(projection, [set(c.members) for c in communities])
    weighted = [(u, v, d["weight"]) for u, v, d in projection.edges(data=True)]
    assert found >= best_modularity(projection.nodes, weighted) - 0.05
    assert communities[0].modularity == pytest.approx(found)


def test_edge_list_export(tmp_path, intrusion_events):
    graph = build_graph(intrusion_events[:3])
    lines = edge_list_lines(graph)
    assert lines[0] == "S1\tprocess\tO10\tfile\twrite\t1"
    assert lines[-1] == "O1\tsocket\tS1\tprocess\trecv\t10"
    path = tmp_path / "edges.tsv"
    write_edge_list(graph, path)
    assert path.read_text().splitlines() == lines


def test_communities_json():
    communities = detect_communities(build_graph(_clique_events()))
    assert json.loads(communities_json(communities)) == {
        "0": ["P1", "P2", "P3"],
        "1": ["P4", "P5", "P6"],
    }
