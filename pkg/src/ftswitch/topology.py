"""Network graph model and path computation.

A :class:`Topology` is an undirected, weighted, simple graph of hosts,
switches and routers.  Element state (up/down, congestion) lives on the
graph; a node that is down leaves its links stored as they are but makes
them unusable.  Everything that routes or forwards only ever looks at the
*residual graph*: usable links between up nodes.

Topologies are treated as values.  :func:`set_element_state` and friends
return a new :class:`Topology` and never touch the one they were given.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence, Union

LinkKey = tuple[str, str]
Target = Union[str, Sequence[str]]


class TopologyError(ValueError):
    """Base class for topology construction and lookup errors."""


class DuplicateId(TopologyError):
    pass


class UnknownEndpoint(TopologyError):
    pass


class NonPositiveWeight(TopologyError):
    pass


class InvalidLink(TopologyError):
    pass


class UnknownElement(TopologyError):
    pass


class NoPath(TopologyError):
    pass


class NoBackup(TopologyError):
    pass


class NodeKind(str, Enum):
    HOST = "host"
    SWITCH = "switch"
    ROUTER = "router"


class State(str, Enum):
    UP = "up"
    DOWN = "down"


def link_key(a: str, b: str) -> LinkKey:
    """Order-independent key for the link between ``a`` and ``b``."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Congestion:
    p_drop: float
    extra_delay: int
    until: int

    def active(self, now: int) -> bool:
        return now < self.until


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    state: State = State.UP


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    weight: float = 1
    state: State = State.UP
    congestion: Congestion | None = None

    @property
    def key(self) -> LinkKey:
        return link_key(self.a, self.b)

    def other(self, node: str) -> str:
        return self.b if node == self.a else self.a


@dataclass(frozen=True)
class Path:
    nodes: tuple[str, ...]
    cost: float

    def links(self) -> list[LinkKey]:
        return [link_key(u, v) for u, v in zip(self.nodes, self.nodes[1:])]

    def uses_link(self, key: LinkKey) -> bool:
        return key in self.links()

    @property
    def src(self) -> str:
        return self.nodes[0]

    @property
    def dst(self) -> str:
        return self.nodes[-1]

    def __str__(self) -> str:
        return " -> ".join(self.nodes)


class Topology:
    """Immutable snapshot of the network graph and element states."""

    def __init__(self, nodes: Mapping[str, Node], links: Mapping[LinkKey, Link]):
        self._nodes = dict(nodes)
        self._links = dict(links)
        adj: dict[str, list[Link]] = {n: [] for n in self._nodes}
        for link in self._links.values():
            adj[link.a].append(link)
            adj[link.b].append(link)
        for node_id, incident in adj.items():
            incident.sort(key=lambda l: l.other(node_id))
        self._adj = adj

    @property
    def nodes(self) -> Mapping[str, Node]:
        return self._nodes

    @property
    def links(self) -> Mapping[LinkKey, Link]:
        return self._links

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownElement(f"unknown node {node_id!r}") from None

    def link(self, a: str, b: str) -> Link:
        try:
            return self._links[link_key(a, b)]
        except KeyError:
            raise UnknownElement(f"unknown link {a}-{b}") from None

    def incident(self, node_id: str) -> list[Link]:
        self.node(node_id)
        return list(self._adj[node_id])

    def is_up(self, node_id: str) -> bool:
        return self.node(node_id).state is State.UP

    def link_usable(self, a: str, b: str) -> bool:
        link = self.link(a, b)
        return (
            link.state is State.UP
            and self._nodes[link.a].state is State.UP
            and self._nodes[link.b].state is State.UP
        )

    def usable_neighbors(self, node_id: str) -> Iterator[tuple[str, Link]]:
        """Yield (neighbor, link) over usable links, sorted by neighbor id."""
        if self._nodes[node_id].state is not State.UP:
            return
        for link in self._adj[node_id]:
            other = link.other(node_id)
            if link.state is State.UP and self._nodes[other].state is State.UP:
                yield other, link

    def residual_links(self) -> list[LinkKey]:
        return sorted(k for k in self._links if self.link_usable(*k))

    def path_cost(self, nodes: Sequence[str]) -> float:
        cost: float = 0
        for u, v in zip(nodes, nodes[1:]):
            cost += self.link(u, v).weight
        return cost

    def path_valid(self, path: Path) -> bool:
        """True if every node is up and every hop is a usable link."""
        if not all(n in self._nodes and self.is_up(n) for n in path.nodes):
            return False
        return all(
            key in self._links and self.link_usable(*key) for key in path.links()
        )

    def replace_node(self, node: Node) -> "Topology":
        nodes = dict(self._nodes)
        nodes[node.id] = node
        return Topology(nodes, self._links)

    def replace_link(self, link: Link) -> "Topology":
        links = dict(self._links)
        links[link.key] = link
        return Topology(self._nodes, links)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return self._nodes == other._nodes and self._links == other._links

    def __repr__(self) -> str:
        return f"Topology({len(self._nodes)} nodes, {len(self._links)} links)"


def build_topology(
    nodes: Iterable[tuple[str, str | NodeKind]],
    links: Iterable[tuple[str, str] | tuple[str, str, float]],
) -> Topology:
    """Build a topology from ``(id, kind)`` node specs and ``(a, b[, weight])`` link specs.

    All elements start up and uncongested.
    """
    node_map: dict[str, Node] = {}
    for node_id, kind in nodes:
        if not node_id:
            raise TopologyError("node id must be non-empty")
        if node_id in node_map:
            raise DuplicateId(f"duplicate node id {node_id!r}")
        node_map[node_id] = Node(node_id, NodeKind(kind))

    link_map: dict[LinkKey, Link] = {}
    for spec in links:
        a, b = spec[0], spec[1]
        weight = spec[2] if len(spec) > 2 else 1
        for end in (a, b):
            if end not in node_map:
                raise UnknownEndpoint(f"link {a}-{b}: unknown endpoint {end!r}")
        if a == b:
            raise InvalidLink(f"link {a}-{b}: self-loop")
        if not weight > 0:
            raise NonPositiveWeight(f"link {a}-{b}: weight {weight} is not positive")
        key = link_key(a, b)
        if key in link_map:
            raise DuplicateId(f"duplicate link {a}-{b}")
        link_map[key] = Link(a, b, weight)
    return Topology(node_map, link_map)


CANONICAL_NODES = [
    ("R1", "router"),
    ("R2", "router"),
    ("S1", "switch"),
    ("S2", "switch"),
    ("S3", "switch"),
    ("S4", "switch"),
    ("S5", "switch"),
    ("S6", "switch"),
]
CANONICAL_LINKS = [
    ("S1", "S2"),
    ("S2", "R1"),
    ("R1", "R2"),  # the redundant router-router link
    ("R2", "S6"),
    ("S1", "S3"),
    ("S3", "S4"),
    ("S4", "S5"),
    ("S5", "R2"),
]


def canonical_topology() -> Topology:
    """Two routers and six switches; the reference LAN used by the bundled scenarios."""
    return build_topology(CANONICAL_NODES, CANONICAL_LINKS)


def _resolve_target(topo: Topology, target: Target) -> str | LinkKey:
    if isinstance(target, str):
        topo.node(target)
        return target
    a, b = target
    topo.link(a, b)
    return link_key(a, b)


def set_element_state(topo: Topology, target: Target, state: State | str) -> Topology:
    """Return a copy of ``topo`` with a node or link set up/down.

    ``target`` is a node id or an ``(a, b)`` pair.  Idempotent.
    """
    state = State(state)
    key = _resolve_target(topo, target)
    if isinstance(key, str):
        node = topo.node(key)
        return topo if node.state is state else topo.replace_node(replace(node, state=state))
    link = topo.links[key]
    return topo if link.state is state else topo.replace_link(replace(link, state=state))


def set_congestion(topo: Topology, a: str, b: str, congestion: Congestion | None) -> Topology:
    link = topo.link(a, b)
    return topo.replace_link(replace(link, congestion=congestion))


def _dijkstra(
    topo: Topology,
    src: str,
    dst: str,
    *,
    banned: frozenset[LinkKey] = frozenset(),
    penalized: frozenset[str] = frozenset(),
) -> tuple[tuple, tuple[str, ...]] | None:
    # Labels are (key, path) with key = (penalty, cost); heap order on the
    # full label gives the lexicographically smallest path among cost ties.
    heap: list[tuple[tuple[int, float], tuple[str, ...]]] = [((0, 0), (src,))]
    settled: set[str] = set()
    while heap:
        key, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == dst:
            return key, path
        for nbr, link in topo.usable_neighbors(node):
            if nbr in settled or link.key in banned:
                continue
            penalty = key[0] + (1 if nbr in penalized else 0)
            heapq.heappush(heap, ((penalty, key[1] + link.weight), path + (nbr,)))
    return None


def _check_endpoints(topo: Topology, src: str, dst: str) -> None:
    topo.node(src)
    topo.node(dst)


def shortest_path(topo: Topology, src: str, dst: str) -> Path:
    """Minimum-cost path over the residual graph.

    Cost ties resolve to the lexicographically smallest node-id sequence.
    """
    _check_endpoints(topo, src, dst)
    if not (topo.is_up(src) and topo.is_up(dst)):
        raise NoPath(f"no path {src} -> {dst}: endpoint down")
    found = _dijkstra(topo, src, dst)
    if found is None:
        raise NoPath(f"no path {src} -> {dst}")
    (_, cost), nodes = found
    return Path(nodes, cost)


def _same_cost(x: float, y: float) -> bool:
    return x == y or math.isclose(x, y, rel_tol=1e-9, abs_tol=1e-12)


def _distances_to(topo: Topology, dst: str) -> dict[str, float]:
    dist = {dst: 0}
    heap: list[tuple[float, str]] = [(0, dst)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, math.inf):
            continue
        for nbr, link in topo.usable_neighbors(node):
            nd = d + link.weight
            if nd < dist.get(nbr, math.inf):
                dist[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    return dist


def equal_cost_paths(topo: Topology, src: str, dst: str) -> list[Path]:
    """All simple residual paths whose cost equals the shortest-path cost, in canonical order."""
    best = shortest_path(topo, src, dst)
    if src == dst:
        return [best]
    target = best.cost
    slack = abs(target) * 1e-9 + 1e-12
    dist = _distances_to(topo, dst)
    found: list[Path] = []

    def walk(path: list[str], on_path: set[str], cost: float) -> None:
        node = path[-1]
        if node == dst:
            if _same_cost(cost, target):
                found.append(Path(tuple(path), cost))
            return
        for nbr, link in topo.usable_neighbors(node):
            if nbr in on_path or nbr not in dist:
                continue
            nc = cost + link.weight
            if nc + dist[nbr] > target + slack:
                continue
            path.append(nbr)
            on_path.add(nbr)
            walk(path, on_path, nc)
            on_path.discard(nbr)
            path.pop()

    walk([src], {src}, 0)
    return sorted(found, key=lambda p: p.nodes)


def _reachable(topo: Topology, src: str, dst: str, banned: frozenset[LinkKey] = frozenset()) -> bool:
    if not (topo.is_up(src) and topo.is_up(dst)):
        return False
    seen = {src}
    queue = deque([src])
    while queue:
        node = queue.popleft()
        if node == dst:
            return True
        for nbr, link in topo.usable_neighbors(node):
            if nbr not in seen and link.key not in banned:
                seen.add(nbr)
                queue.append(nbr)
    return False


def is_reachable(topo: Topology, src: str, dst: str) -> bool:
    """True iff ``src`` and ``dst`` are connected in the residual graph."""
    _check_endpoints(topo, src, dst)
    return _reachable(topo, src, dst)


def mandatory_links(topo: Topology, path: Path) -> frozenset[LinkKey]:
    """Links of ``path`` that every residual path between its endpoints must cross."""
    return frozenset(
        key
        for key in path.links()
        if not _reachable(topo, path.src, path.dst, banned=frozenset([key]))
    )


def disjoint_backup(topo: Topology, primary: Path) -> Path:
    """Backup route for ``primary``: shares none of its avoidable links.

    Links that separate the endpoints (bridges every path has to use, e.g.
    the single uplink of a leaf switch) cannot be avoided and are allowed.
    Among candidates the backup minimises shared intermediate nodes, then
    cost, then node-id order.
    """
    src, dst = primary.src, primary.dst
    _check_endpoints(topo, src, dst)
    if src == dst:
        raise NoBackup(f"no backup for single-node path {src}")
    if not topo.path_valid(primary):
        raise NoBackup(f"primary {primary} is not valid in the residual graph")
    required = mandatory_links(topo, primary)
    banned = frozenset(primary.links()) - required
    found = _dijkstra(topo, src, dst, banned=banned, penalized=frozenset(primary.nodes[1:-1]))
    if found is None or found[1] == primary.nodes:
        raise NoBackup(f"no link-disjoint alternative to {primary}")
    (_, cost), nodes = found
    return Path(nodes, cost)
