import itertools

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from qnetsched.network import (
    CellKey,
    InfeasibleTopology,
    Kind,
    Network,
    ResourceGraph,
    build_path_partition,
    compute_local_areas,
    dumbbell,
    enumerate_allowed_paths,
    random_topology,
    validate_graph,
    well_behaved,
)


def exhaustive_allowed_paths(graph: ResourceGraph) -> set:
    """Brute force: every simple path between end nodes, then the two minimizations."""
    areas = compute_local_areas(graph)
    out = set()
    for a, b in itertools.combinations(graph.end_nodes, 2):
        found = []

        def walk(path):
            v = path[-1]
            for w in sorted(graph.neighbors(v)):
                if w in path:
                    continue
                if w == b:
                    found.append(tuple(path + [w]))
                elif graph.kinds[w] is not Kind.END_NODE:
                    walk(path + [w])

        walk([a])
        if not found:
            continue
        backbones = [sum(graph.kinds[v] is Kind.BACKBONE for v in p) for p in found]
        fewest = min(backbones)
        kept = [p for p, n in zip(found, backbones) if n == fewest]

        def egis_per_area(path):
            counts = {}
            for v in path[1:-1]:
                if graph.kinds[v] is Kind.EGI:
                    counts[areas.area_of[v]] = counts.get(areas.area_of[v], 0) + 1
            return counts

        best = {}
        for p in kept:
            for area, n in egis_per_area(p).items():
                best[area] = min(best.get(area, n), n)
        for p in kept:
            if all(n == best[area] for area, n in egis_per_area(p).items()):
                out.add(p if p[0] < p[-1] else tuple(reversed(p)))
    return out


small_topologies = st.tuples(
    st.sampled_from([(1, 2, 6), (2, 2, 6), (2, 3, 7), (0, 1, 5), (3, 3, 8), (1, 1, 4)]),
    st.integers(0, 10_000),
)


# -- validation --------------------------------------------------------------


def test_dumbbell_validates():
    g = dumbbell()
    report = validate_graph(g)
    assert report.ok
    assert len(g.of_kind(Kind.END_NODE)) == 15
    assert len(g.of_kind(Kind.EGI)) == 3
    assert len(g.of_kind(Kind.JUNCTION)) == 2
    assert len(g.of_kind(Kind.BACKBONE)) == 1


def test_end_node_edge_is_forbidden():
    g = ResourceGraph.build(
        {1: Kind.EGI, 2: Kind.END_NODE, 3: Kind.END_NODE}, [(2, 1), (3, 1), (2, 3)]
    )
    report = validate_graph(g)
    assert (2, 3) in report.forbidden_edges
    assert not report.ok


def test_two_hubs_without_backbone_are_not_connected():
    kinds = {1: Kind.EGI, 2: Kind.EGI, 10: Kind.END_NODE, 11: Kind.END_NODE, 12: Kind.END_NODE, 13: Kind.END_NODE}
    g = ResourceGraph.build(kinds, [(10, 1), (11, 1), (12, 2), (13, 2)])
    report = validate_graph(g)
    assert not report.internally_connected
    assert not report.forbidden_edges


def test_transit_through_end_node_does_not_connect():
    kinds = {1: Kind.EGI, 2: Kind.EGI, 10: Kind.END_NODE}
    g = ResourceGraph.build(kinds, [(10, 1), (10, 2)])
    assert not validate_graph(g).internally_connected


def test_network_rejects_invalid_graph():
    g = ResourceGraph.build({1: Kind.EGI, 2: Kind.END_NODE, 3: Kind.END_NODE}, [(2, 3), (2, 1)])
    with pytest.raises(ValueError):
        Network.from_graph(g)


def test_graph_json_round_trip(tmp_path):
    g = dumbbell()
    path = tmp_path / "g.json"
    g.save(path)
    assert ResourceGraph.load(path) == g


# -- local areas ---------------------------------------------------------------


def test_dumbbell_has_two_areas():
    g = dumbbell()
    areas = compute_local_areas(g)
    assert len(areas) == 2
    internal = {frozenset(areas.internal_of(i, g)) for i in range(2)}
    assert internal == {frozenset({1, 2, 4}), frozenset({3, 5})}
    assert areas.area_of[10] == areas.area_of[1]
    assert areas.area_of[20] == areas.area_of[3]


def test_no_backbone_single_area():
    g = random_topology(0, 1, 6, seed=3)
    areas = compute_local_areas(g)
    assert len(areas) == 1
    assert set(areas.areas[0]) == set(g.kinds)


def test_three_areas_joined_by_three_backbones():
    g = random_topology(3, 3, 9, seed=11)
    stripped = nx.Graph()
    core = [v for v, k in g.kinds.items() if k not in (Kind.BACKBONE, Kind.END_NODE)]
    stripped.add_nodes_from(core)
    stripped.add_edges_from(tuple(e) for e in g.edges if set(e) <= set(core))
    assert len(compute_local_areas(g)) == nx.number_connected_components(stripped) == 3


# -- allowed paths ---------------------------------------------------------------


def test_same_egi_pair_has_single_path():
    g = dumbbell()
    assert [p for p in enumerate_allowed_paths(g) if (p[0], p[-1]) == (10, 11)] == [(10, 1, 11)]


def test_cross_hub_paths_use_one_backbone_and_one_egi_per_area():
    g = dumbbell()
    paths = [p for p in enumerate_allowed_paths(g) if (p[0], p[-1]) == (10, 20)]
    assert paths == [(10, 1, 4, 6, 5, 3, 20)]


def test_two_backbone_route_excluded_when_one_backbone_route_exists():
    # area X (EGI 1) joins area Y (EGI 2) directly via backbone 10 and via area Z and backbones 11, 12
    kinds = {
        1: Kind.EGI, 2: Kind.EGI, 3: Kind.EGI,
        4: Kind.JUNCTION, 5: Kind.JUNCTION, 6: Kind.JUNCTION, 7: Kind.JUNCTION, 8: Kind.JUNCTION, 9: Kind.JUNCTION,
        10: Kind.BACKBONE, 11: Kind.BACKBONE, 12: Kind.BACKBONE,
        20: Kind.END_NODE, 21: Kind.END_NODE, 22: Kind.END_NODE,
    }
    edges = [
        (20, 1), (21, 2), (22, 3),
        (1, 4), (4, 10), (10, 5), (5, 2),
        (1, 6), (6, 11), (11, 7), (7, 3),
        (3, 8), (8, 12), (12, 9), (9, 2),
    ]
    g = ResourceGraph.build(kinds, edges)
    assert validate_graph(g).ok
    paths = [p for p in enumerate_allowed_paths(g) if (p[0], p[-1]) == (20, 21)]
    assert paths == [(20, 1, 4, 10, 5, 2, 21)]


def test_dumbbell_matches_exhaustive_search():
    g = dumbbell()
    assert set(enumerate_allowed_paths(g)) == exhaustive_allowed_paths(g)


@given(small_topologies)
def test_allowed_paths_match_exhaustive_search(case):
    (b, a, e), seed = case
    g = random_topology(b, a, e, seed)
    assert set(enumerate_allowed_paths(g)) == exhaustive_allowed_paths(g)


@given(small_topologies)
def test_allowed_path_structure(case):
    (b, a, e), seed = case
    g = random_topology(b, a, e, seed)
    areas = compute_local_areas(g)
    for p in enumerate_allowed_paths(g):
        assert len(set(p)) == len(p)
        assert p[0] < p[-1]
        assert g.kinds[p[0]] is Kind.END_NODE and g.kinds[p[-1]] is Kind.END_NODE
        assert all(g.kinds[v] is not Kind.END_NODE for v in p[1:-1])
        assert all(frozenset(uv) in g.edges for uv in zip(p, p[1:]))
        # at most two EGIs per area, and two only for an area holding both endpoints
        per_area = {}
        for v in p[1:-1]:
            if g.kinds[v] is Kind.EGI:
                per_area[areas.area_of[v]] = per_area.get(areas.area_of[v], 0) + 1
        for area, n in per_area.items():
            assert n <= 2
            if n == 2:
                assert areas.area_of[p[0]] == areas.area_of[p[-1]] == area


# -- partition -------------------------------------------------------------------


def test_dumbbell_partition_cells():
    net = Network.from_graph(dumbbell())
    part = net.partition
    assert set(part.cells) == {
        CellKey.backbone(), CellKey.junction(0), CellKey.junction(1),
        CellKey.interface(1), CellKey.interface(2), CellKey.interface(3),
    }
    assert part.xi[CellKey.backbone()] == frozenset({1, 2, 3, 4, 5, 6})
    # junction 5 only carries backbone routes, so the second junction cell is empty
    assert part.cells[CellKey.junction(1)] == frozenset()
    assert part.xi[CellKey.junction(0)] == frozenset({1, 2, 4})
    assert part.xi[CellKey.interface(3)] == frozenset({3})


def test_single_egi_star():
    kinds = {1: Kind.EGI, **{v: Kind.END_NODE for v in range(10, 15)}}
    g = ResourceGraph.build(kinds, [(v, 1) for v in range(10, 15)])
    part = Network.from_graph(g).partition
    nonempty = {k: v for k, v in part.cells.items() if v}
    assert list(nonempty) == [CellKey.interface(1)]
    assert len(nonempty[CellKey.interface(1)]) == 10
    assert part.xi[CellKey.interface(1)] == frozenset({1})


def test_cell_key_ordering_and_parsing():
    keys = [CellKey.interface(3), CellKey.backbone(), CellKey.junction(1)]
    assert sorted(keys) == [CellKey.backbone(), CellKey.junction(1), CellKey.interface(3)]
    for k in keys:
        assert CellKey.parse(str(k)) == k


def test_partition_for_unknown_path_shape_raises():
    from qnetsched.network import InternalError

    g = dumbbell()
    areas = compute_local_areas(g)
    with pytest.raises(InternalError):
        build_path_partition([(10, 11)], areas, g)


@given(small_topologies)
def test_partition_is_disjoint_and_complete(case):
    (b, a, e), seed = case
    g = random_topology(b, a, e, seed)
    net = Network.from_graph(g)
    paths = enumerate_allowed_paths(g)
    cells = list(net.partition.cells.values())
    for c1, c2 in itertools.combinations(cells, 2):
        assert not (c1 & c2)
    assert set().union(*cells) == set(paths)
    for key, ps in net.partition.cells.items():
        assert net.partition.xi[key] == frozenset(v for p in ps for v in p[1:-1])


@given(small_topologies)
def test_associated_resources_are_well_behaved(case):
    (b, a, e), seed = case
    net = Network.from_graph(random_topology(b, a, e, seed))
    xi = net.partition.xi
    assert well_behaved(xi)
    bb = xi[CellKey.backbone()]
    for key, res in xi.items():
        if key != CellKey.backbone() and res & bb:
            assert res < bb


def test_well_behaved_detects_crossing_sets():
    xi = {CellKey.interface(1): frozenset({1, 2}), CellKey.interface(2): frozenset({2, 3})}
    assert not well_behaved(xi)


def test_partition_over_many_random_graphs():
    for seed in range(100):
        b, a, e = [(1, 2, 15), (2, 2, 15), (2, 3, 30), (0, 1, 10)][seed % 4]
        net = Network.from_graph(random_topology(b, a, e, seed))
        seen = set()
        for ps in net.partition.cells.values():
            assert not (seen & ps)
            seen |= ps


# -- random topologies -----------------------------------------------------------


@pytest.mark.parametrize(
    "backbones,areas,end_nodes",
    [(1, 2, 15), (2, 2, 15), (2, 2, 50), (2, 3, 30), (2, 3, 50), (3, 3, 30), (5, 4, 40), (6, 3, 35), (7, 5, 50), (12, 4, 40)],
)
def test_random_topology_counts(backbones, areas, end_nodes):
    g = random_topology(backbones, areas, end_nodes, seed=7)
    assert validate_graph(g).ok
    assert len(g.of_kind(Kind.BACKBONE)) == backbones
    assert len(g.of_kind(Kind.END_NODE)) == end_nodes
    assert len(compute_local_areas(g)) == areas
    for bb in g.of_kind(Kind.BACKBONE):
        assert all(g.kinds[v] is Kind.JUNCTION for v in g.neighbors(bb))


def test_random_topology_is_deterministic():
    assert random_topology(1, 2, 15, seed=7) == random_topology(1, 2, 15, seed=7)
    assert random_topology(1, 2, 15, seed=7) != random_topology(1, 2, 15, seed=8)


def test_random_topology_infeasible():
    with pytest.raises(InfeasibleTopology):
        random_topology(0, 2, 15, seed=1)
    with pytest.raises(InfeasibleTopology):
        random_topology(1, 1, 1, seed=1)


@given(st.integers(0, 3), st.integers(1, 4), st.integers(4, 20), st.integers(0, 1000))
def test_random_topology_always_validates(backbones, areas, end_nodes, seed):
    if backbones < areas - 1 or end_nodes < areas:
        with pytest.raises(InfeasibleTopology):
            random_topology(backbones, areas, end_nodes, seed)
        return
    assert validate_graph(random_topology(backbones, areas, end_nodes, seed)).ok
