"""Graphviz DOT export with node-status colouring."""

from __future__ import annotations

from typing import Mapping

from .failover import NodeStatus
from .topology import NodeKind, Topology


class MissingStatus(KeyError):
    pass


COLORS = {
    NodeStatus.ACTIVE: "green",
    NodeStatus.FAILED: "red",
    NodeStatus.REROUTED: "orange",
}
SHAPES = {
    NodeKind.ROUTER: "circle",
    NodeKind.SWITCH: "box",
    NodeKind.HOST: "ellipse",
}


def export_dot(topology: Topology, statuses: Mapping[str, NodeStatus | str], name: str = "network") -> str:
    """Render ``topology`` as an undirected DOT graph.

    Nodes are filled by status; links that cannot carry traffic are dashed.
    Output is sorted so equal inputs give identical text.
    """
    missing = sorted(set(topology.nodes) - set(statuses))
    if missing:
        raise MissingStatus(f"no status for nodes: {', '.join(missing)}")
    lines = [f'graph "{name}" {{', '  node [style=filled];']
    for node_id in sorted(topology.nodes):
        node = topology.nodes[node_id]
        color = COLORS[NodeStatus(statuses[node_id])]
        lines.append(f'  "{node_id}" [shape={SHAPES[node.kind]}, fillcolor={color}];')
    for a, b in sorted(topology.links):
        link = topology.links[(a, b)]
        attrs = [f'label="{link.weight}"']
        if not topology.link_usable(a, b):
            attrs.append("style=dashed")
        lines.append(f'  "{a}" -- "{b}" [{", ".join(attrs)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
