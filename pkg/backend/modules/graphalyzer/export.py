import json

from modules.graphalyzer.builder import ProvenanceGraph


def edge_list_lines(graph: ProvenanceGraph) -> list[str]:
    """Une ligne par arête : src, type, dst, type, événement, ts."""
    lines = []
    for src, dst, data in graph.graph.edges(data=True):
        lines.append(
            "\t".join(
                [
                    src,
                    graph.node_type(src),
                    dst,
                    graph.node_type(dst),
                    data["event_type"],
                    str(data["timestamp"]),
                ]
            )
        )
    return sorted(lines, key=lambda line: (int(line.rsplit("\t", 1)[1]), line))


def write_edge_list(graph: ProvenanceGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for line in edge_list_lines(graph):
            handle.write(line + "\n")


def communities_json(communities) -> str:
    return json.dumps(
        {str(c.id): sorted(c.members) for c in communities}, sort_keys=True
    )
