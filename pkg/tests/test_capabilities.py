import csv
import io

import pytest
from hypothesis import given, strategies as st

from qnetsched.capabilities import (
    CapabilitiesTable,
    CapabilityEntry,
    CapabilityModel,
    feasible_paths,
    generate_capabilities,
    regenerate,
)
from qnetsched.network import Kind, Network, dumbbell, random_topology

DETERMINISTIC = CapabilityModel(
    base_rate_mean=3.0,
    base_rate_std=0.0,
    base_fid_mean=0.9,
    base_fid_std=0.0,
    per_hop_rate_factor=1.0,
    per_backbone_rate_factor=0.1,
    per_hop_fid_penalty=0.0,
    per_backbone_fid_penalty=0.0,
)


@pytest.fixture(scope="module")
def net():
    return Network.from_graph(dumbbell())


def test_identity_scaling_on_single_egi_path(net):
    table = generate_capabilities(net.partition, net.graph, DETERMINISTIC, seed=1)
    entry = table[(10, 1, 11)]
    assert entry.rate == pytest.approx(3.0)
    assert entry.fidelity == pytest.approx(0.9)


def test_backbone_factor_scales_rate():
    model = CapabilityModel(
        base_rate_mean=3.0, base_rate_std=0.0, base_fid_mean=0.9, base_fid_std=0.0,
        per_hop_rate_factor=0.8, per_backbone_rate_factor=0.1,
    )
    net = Network.from_graph(dumbbell())
    table = generate_capabilities(net.partition, net.graph, model, seed=0)
    with_bb = table[(10, 1, 4, 6, 5, 3, 20)]
    # 5 internal resources: 4 hops, one of which is a backbone
    assert with_bb.rate == pytest.approx(3.0 * 0.8**3 * 0.1)
    junction_route = table[(10, 1, 4, 2, 15)]
    assert junction_route.rate == pytest.approx(3.0 * 0.8**2)
    assert table.backbone_count[(10, 1, 4, 6, 5, 3, 20)] == 1


def test_entries_stay_physical():
    g = random_topology(5, 4, 40, seed=2)
    net = Network.from_graph(g)
    model = CapabilityModel(base_rate_std=3.0, base_fid_std=0.3)
    table = generate_capabilities(net.partition, g, model, seed=5)
    assert len(table) >= 1000
    for e in table.entries.values():
        assert e.rate > 0
        assert 0.0 <= e.fidelity <= 1.0


def test_every_allowed_path_has_one_entry(net):
    table = generate_capabilities(net.partition, net.graph, CapabilityModel(), seed=0)
    assert set(table.entries) == set(net.partition.paths)


def test_deterministic_per_seed(net):
    a = generate_capabilities(net.partition, net.graph, CapabilityModel(), seed=4)
    b = generate_capabilities(net.partition, net.graph, CapabilityModel(), seed=4)
    c = generate_capabilities(net.partition, net.graph, CapabilityModel(), seed=5)
    assert a == b
    assert a != c


def test_version_follows_partition_and_regeneration(net):
    table = generate_capabilities(net.partition.with_version(3), net.graph, CapabilityModel(), seed=0)
    assert table.version == 4
    again = regenerate(table, net.partition.with_version(4), net.graph, CapabilityModel(), seed=1)
    assert again.version > table.version


def test_feasible_paths_filters():
    g = random_topology(2, 2, 15, seed=3)
    net = Network.from_graph(g)
    table = generate_capabilities(net.partition, g, CapabilityModel(), seed=0)
    a, b = net.partition.paths[0][0], net.partition.paths[0][-1]
    everything = feasible_paths(table, a, b, 0.0)
    assert set(everything) == set(net.paths_between(a, b))
    assert feasible_paths(table, a, b, 1.01) == []
    assert feasible_paths(table, b, a, 0.0) == everything


def test_feasible_paths_sorted_by_rate():
    paths = [(1, 5, 2), (1, 6, 2), (1, 7, 2)]
    rates = [50.0, 80.0, 65.0]
    table = CapabilitiesTable({p: CapabilityEntry(r, 0.9) for p, r in zip(paths, rates)}, 1)
    assert feasible_paths(table, 1, 2, 0.5) == [(1, 6, 2), (1, 7, 2), (1, 5, 2)]
    with pytest.raises(ValueError):
        feasible_paths(table, 1, 1, 0.5)


def test_entry_validation():
    with pytest.raises(ValueError):
        CapabilityEntry(0.0, 0.5)
    with pytest.raises(ValueError):
        CapabilityEntry(1.0, 1.5)
    with pytest.raises(ValueError):
        CapabilityModel(per_hop_rate_factor=0.0)
    with pytest.raises(ValueError):
        CapabilityModel(per_hop_fid_penalty=-0.1)


def test_csv_export(net):
    table = generate_capabilities(net.partition, net.graph, CapabilityModel(), seed=0)
    rows = list(csv.DictReader(io.StringIO(table.to_csv())))
    assert len(rows) == len(table)
    bb = [r for r in rows if r["path"] == "10-1-4-6-5-3-20"][0]
    assert bb["hop_count"] == "6" and bb["backbone_count"] == "1"
    assert float(bb["rate"]) == table[(10, 1, 4, 6, 5, 3, 20)].rate


@given(
    st.floats(0.1, 10), st.floats(0, 5), st.floats(0.3, 1.0), st.floats(0, 0.5),
    st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.floats(0, 0.1), st.floats(0, 0.2),
    st.integers(0, 2**31),
)
def test_generation_stays_in_range(rm, rs, fm, fs, hop, bb, hp, bp, seed):
    net = Network.from_graph(dumbbell())
    model = CapabilityModel(rm, rs, fm, fs, hop, bb, hp, bp)
    table = generate_capabilities(net.partition, net.graph, model, seed)
    for path, e in table.entries.items():
        assert e.rate > 0 and 0 <= e.fidelity <= 1
        if any(net.graph.kinds[v] is Kind.BACKBONE for v in path):
            assert table.backbone_count[path] >= 1
