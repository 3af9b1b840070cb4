import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftswitch.topology import (
    CANONICAL_LINKS,
    CANONICAL_NODES,
    DuplicateId,
    NoBackup,
    NonPositiveWeight,
    NoPath,
    Path,
    State,
    UnknownElement,
    UnknownEndpoint,
    build_topology,
    disjoint_backup,
    equal_cost_paths,
    is_reachable,
    mandatory_links,
    set_element_state,
    shortest_path,
)

from oracles import all_simple_paths, best_path, connected

CANON_IDS = [n for n, _ in CANONICAL_NODES]
CANON_EDGES = [(a, b, 1) for a, b in CANONICAL_LINKS]

SQUARE = build_topology(
    [(n, "switch") for n in "ABCD"],
    [("A", "B"), ("B", "D"), ("A", "C"), ("C", "D")],
)


# -- construction -----------------------------------------------------------------

def test_canonical_shape(canon):
    assert len(canon.nodes) == 8
    assert len(canon.links) == 8
    assert all(n.state is State.UP for n in canon.nodes.values())
    assert all(l.state is State.UP and l.congestion is None for l in canon.links.values())


def test_single_node_topology():
    topo = build_topology([("A", "host")], [])
    assert list(topo.nodes) == ["A"]
    assert len(topo.links) == 0


@pytest.mark.parametrize("weight", [0, -1, -0.5])
def test_non_positive_weight_rejected(weight):
    with pytest.raises(NonPositiveWeight, match="A-B"):
        build_topology([("A", "switch"), ("B", "switch")], [("A", "B", weight)])


def test_duplicate_and_unknown_ids_named():
    with pytest.raises(DuplicateId, match="'A'"):
        build_topology([("A", "switch"), ("A", "router")], [])
    with pytest.raises(UnknownEndpoint, match="'Z'"):
        build_topology([("A", "switch")], [("A", "Z")])
    with pytest.raises(DuplicateId):
        build_topology([("A", "switch"), ("B", "switch")], [("A", "B"), ("B", "A")])


# -- element state --------------------------------------------------------------

def test_link_down_leaves_residual_graph(canon):
    topo = set_element_state(canon, ("S2", "R1"), "down")
    assert ("R1", "S2") not in topo.residual_links()
    assert len(topo.residual_links()) == 7


def test_node_down_disables_incident_links(canon):
    topo = set_element_state(canon, "S2", State.DOWN)
    assert not topo.link_usable("S1", "S2")
    assert not topo.link_usable("S2", "R1")
    # stored link state is untouched
    assert topo.link("S1", "S2").state is State.UP


def test_node_down_then_up_restores(canon):
    down = set_element_state(canon, "S2", "down")
    assert set_element_state(down, "S2", "up") == canon
    assert set_element_state(down, "S2", "down") == down


def test_unknown_element(canon):
    with pytest.raises(UnknownElement):
        set_element_state(canon, "S9", "down")
    with pytest.raises(UnknownElement):
        set_element_state(canon, ("S1", "S6"), "down")


# -- shortest paths -------------------------------------------------------------

def test_canonical_shortest(canon):
    path = shortest_path(canon, "S1", "S6")
    assert path.nodes == ("S1", "S2", "R1", "R2", "S6")
    assert path.cost == 4
    assert best_path(CANON_IDS, CANON_EDGES, "S1", "S6") == (4, path.nodes)


def test_canonical_shortest_with_s2_down(canon):
    topo = set_element_state(canon, "S2", "down")
    path = shortest_path(topo, "S1", "S6")
    assert path.nodes == ("S1", "S3", "S4", "S5", "R2", "S6")
    assert path.cost == 5
    assert best_path(CANON_IDS, CANON_EDGES, "S1", "S6", down_nodes={"S2"}) == (5, path.nodes)


def test_identity_path(canon):
    assert shortest_path(canon, "S3", "S3") == Path(("S3",), 0)
    assert equal_cost_paths(canon, "S3", "S3") == [Path(("S3",), 0)]


def test_isolated_pair_has_no_path():
    topo = build_topology([("A", "host"), ("B", "host")], [])
    with pytest.raises(NoPath):
        shortest_path(topo, "A", "B")
    with pytest.raises(NoPath):
        equal_cost_paths(topo, "A", "B")
    assert not is_reachable(topo, "A", "B")


def test_down_endpoint_has_no_path(canon):
    topo = set_element_state(canon, "S6", "down")
    with pytest.raises(NoPath):
        shortest_path(topo, "S1", "S6")


def test_lexicographic_tie_break():
    # A-C-D and A-B-D both cost 2; insertion order must not matter
    topo = build_topology([(n, "switch") for n in "DCBA"], [("C", "D"), ("A", "C"), ("B", "D"), ("A", "B")])
    assert shortest_path(topo, "A", "D").nodes == ("A", "B", "D")


def test_square_equal_cost():
    paths = equal_cost_paths(SQUARE, "A", "D")
    assert [p.nodes for p in paths] == [("A", "B", "D"), ("A", "C", "D")]
    assert all(p.cost == 2 for p in paths)


def test_canonical_single_equal_cost_path(canon):
    assert [p.nodes for p in equal_cost_paths(canon, "S1", "S6")] == [("S1", "S2", "R1", "R2", "S6")]


# -- backups ----------------------------------------------------------------------

def test_canonical_backup(canon):
    primary = shortest_path(canon, "S1", "S6")
    backup = disjoint_backup(canon, primary)
    assert backup.nodes == ("S1", "S3", "S4", "S5", "R2", "S6")
    assert backup.cost == 5
    # S6 hangs off R2 only, so R2-S6 is unavoidable
    assert mandatory_links(canon, primary) == frozenset({("R2", "S6")})


def test_chain_has_no_backup():
    topo = build_topology([(n, "switch") for n in "ABC"], [("A", "B"), ("B", "C")])
    with pytest.raises(NoBackup):
        disjoint_backup(topo, shortest_path(topo, "A", "C"))


def test_square_backup():
    primary = Path(("A", "B", "D"), 2)
    assert disjoint_backup(SQUARE, primary).nodes == ("A", "C", "D")


def test_backup_prefers_fewer_shared_nodes():
    # A-B-C-D primary; A-X-C-D shares C, A-Y-Z-W-D shares nothing but costs more
    topo = build_topology(
        [(n, "switch") for n in ["A", "B", "C", "D", "W", "X", "Y", "Z"]],
        [("A", "B"), ("B", "C"), ("C", "D"), ("A", "X"), ("X", "C"), ("C", "Y"),
         ("Y", "D"), ("A", "Z"), ("Z", "W"), ("W", "D")],
    )
    primary = shortest_path(topo, "A", "D")
    assert primary.nodes == ("A", "B", "C", "D")
    assert disjoint_backup(topo, primary).nodes == ("A", "Z", "W", "D")


# -- reachability -----------------------------------------------------------------

def test_reachable_examples(canon):
    assert is_reachable(set_element_state(canon, "S2", "down"), "S1", "S6")
    assert is_reachable(set_element_state(canon, "S2", "down"), "S1", "R1")
    # S1's only other neighbour S3 is cut off once S4 fails too
    both = set_element_state(set_element_state(canon, "S2", "down"), "S4", "down")
    assert not is_reachable(both, "S1", "R1")
    assert not connected(CANON_IDS, CANON_EDGES, "S1", "R1", down_nodes={"S2", "S4"})
    with pytest.raises(UnknownElement):
        is_reachable(canon, "S1", "Q")


# -- properties against the brute-force oracle ---------------------------------------

@st.composite
def graphs(draw, max_nodes=7):
    n = draw(st.integers(2, max_nodes))
    nodes = [f"N{i}" for i in range(n)]
    pairs = [(nodes[i], nodes[j]) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    edges = [(a, b, draw(st.integers(1, 4))) for a, b in chosen]
    down = draw(st.sets(st.sampled_from(nodes), max_size=2))
    src, dst = draw(st.sampled_from(nodes)), draw(st.sampled_from(nodes))
    return nodes, edges, down, src, dst


def _build(nodes, edges, down=()):
    topo = build_topology([(n, "switch") for n in nodes], edges)
    for n in down:
        topo = set_element_state(topo, n, "down")
    return topo


@settings(max_examples=300, deadline=None)
@given(graphs())
def test_shortest_path_matches_oracle(case):
    nodes, edges, down, src, dst = case
    topo = _build(nodes, edges, down)
    expected = best_path(nodes, edges, src, dst, down_nodes=down)
    if expected is None:
        with pytest.raises(NoPath):
            shortest_path(topo, src, dst)
        assert not is_reachable(topo, src, dst)
        return
    path = shortest_path(topo, src, dst)
    assert (path.cost, path.nodes) == expected
    assert path.cost == topo.path_cost(path.nodes)
    assert shortest_path(topo, dst, src).cost == path.cost
    assert is_reachable(topo, src, dst)


@settings(max_examples=300, deadline=None)
@given(graphs())
def test_equal_cost_paths_match_oracle(case):
    nodes, edges, down, src, dst = case
    topo = _build(nodes, edges, down)
    paths = all_simple_paths(nodes, edges, src, dst, down_nodes=down)
    if not paths:
        return
    best = min(c for c, _ in paths)
    expected = sorted(p for c, p in paths if c == best)
    got = equal_cost_paths(topo, src, dst)
    assert [p.nodes for p in got] == expected
    assert shortest_path(topo, src, dst) in got
    assert all(p.cost == best for p in got)


@settings(max_examples=300, deadline=None)
@given(graphs())
def test_backup_avoids_every_avoidable_primary_link(case):
    nodes, edges, down, src, dst = case
    topo = _build(nodes, edges, down)
    if src == dst or not is_reachable(topo, src, dst):
        return
    primary = shortest_path(topo, src, dst)
    forced = mandatory_links(topo, primary)
    try:
        backup = disjoint_backup(topo, primary)
    except NoBackup:
        # no other simple path may avoid all of the avoidable primary links
        avoidable = {frozenset(k) for k in primary.links()} - {frozenset(k) for k in forced}
        for _, p in all_simple_paths(nodes, edges, src, dst, down_nodes=down):
            hops = {frozenset(h) for h in zip(p, p[1:])}
            assert p == primary.nodes or hops & avoidable
        return
    assert topo.path_valid(backup)
    assert backup != primary
    assert not (set(backup.links()) & set(primary.links())) - forced


@settings(max_examples=200, deadline=None)
@given(graphs(), st.data())
def test_down_then_up_is_identity(case, data):
    nodes, edges, _, src, dst = case
    topo = _build(nodes, edges)
    targets = list(nodes) + [(a, b) for a, b, _ in edges]
    target = data.draw(st.sampled_from(targets))
    restored = set_element_state(set_element_state(topo, target, "down"), target, "up")
    assert restored == topo
    try:
        before = shortest_path(topo, src, dst)
    except NoPath:
        before = None
    try:
        after = shortest_path(restored, src, dst)
    except NoPath:
        after = None
    assert before == after


def test_reachability_matches_oracle():
    rng = random.Random(11)
    for _ in range(300):
        nodes = [f"N{i}" for i in range(rng.randint(2, 9))]
        edges = [(a, b, 1) for i, a in enumerate(nodes) for b in nodes[i + 1:] if rng.random() < 0.3]
        down = set(rng.sample(nodes, rng.randint(0, 2)))
        topo = _build(nodes, edges, down)
        src, dst = rng.choice(nodes), rng.choice(nodes)
        assert is_reachable(topo, src, dst) == connected(nodes, edges, src, dst, down_nodes=down)
