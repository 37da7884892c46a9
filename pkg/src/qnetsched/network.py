"""Network resource graph, local areas, allowed paths and the path partition.

Vertices are typed components (end node, EGI, junction, backbone).  Only
three edge kinds are legal: end node to EGI, EGI to junction and junction to
backbone.  Entanglement generation paths run between two distinct end nodes
and never pass *through* an end node.
"""

from __future__ import annotations

import enum
import itertools
import json
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterable, Iterator, Mapping

ComponentId = int
Path = tuple[ComponentId, ...]


class Kind(str, enum.Enum):
    END_NODE = "EndNode"
    EGI = "EGI"
    JUNCTION = "Junction"
    BACKBONE = "Backbone"


ALLOWED_EDGE_KINDS = frozenset(
    {
        frozenset({Kind.END_NODE, Kind.EGI}),
        frozenset({Kind.EGI, Kind.JUNCTION}),
        frozenset({Kind.JUNCTION, Kind.BACKBONE}),
    }
)


class InfeasibleTopology(ValueError):
    """Requested component counts cannot form an internally connected graph."""


class InternalError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResourceGraph:
    """Undirected typed graph.  Immutable once built."""

    kinds: Mapping[ComponentId, Kind]
    edges: frozenset[frozenset[ComponentId]]
    discoverable: frozenset[ComponentId] = frozenset()
    adjacency: Mapping[ComponentId, frozenset[ComponentId]] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        adj: dict[ComponentId, set[ComponentId]] = {v: set() for v in self.kinds}
        for edge in self.edges:
            if len(edge) != 2:
                raise ValueError(f"self-loop or malformed edge {sorted(edge)}")
            u, v = tuple(edge)
            if u not in self.kinds or v not in self.kinds:
                raise ValueError(f"edge {sorted(edge)} references unknown vertex")
            adj[u].add(v)
            adj[v].add(u)
        object.__setattr__(
            self, "adjacency", {v: frozenset(ns) for v, ns in adj.items()}
        )

    @classmethod
    def build(
        cls,
        kinds: Mapping[ComponentId, Kind | str],
        edges: Iterable[tuple[ComponentId, ComponentId]],
        discoverable: Iterable[ComponentId] = (),
    ) -> "ResourceGraph":
        return cls(
            kinds={int(v): Kind(k) for v, k in kinds.items()},
            edges=frozenset(frozenset((int(u), int(v))) for u, v in edges),
            discoverable=frozenset(int(v) for v in discoverable),
        )

    def of_kind(self, kind: Kind) -> list[ComponentId]:
        return sorted(v for v, k in self.kinds.items() if k is kind)

    @property
    def end_nodes(self) -> list[ComponentId]:
        return self.of_kind(Kind.END_NODE)

    def is_internal(self, node: ComponentId) -> bool:
        return self.kinds[node] is not Kind.END_NODE

    def neighbors(self, node: ComponentId) -> frozenset[ComponentId]:
        return self.adjacency[node]

    # -- serialisation -------------------------------------------------
    def to_json(self) -> dict:
        return {
            "vertices": [
                {"id": v, "kind": self.kinds[v].value, "discoverable": v in self.discoverable}
                for v in sorted(self.kinds)
            ],
            "edges": sorted(sorted(e) for e in self.edges),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "ResourceGraph":
        kinds = {int(v["id"]): Kind(v["kind"]) for v in data["vertices"]}
        disc = [int(v["id"]) for v in data["vertices"] if v.get("discoverable")]
        return cls.build(kinds, [tuple(e) for e in data["edges"]], disc)

    def save(self, path: str | FsPath) -> None:
        FsPath(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path: str | FsPath) -> "ResourceGraph":
        return cls.from_json(json.loads(FsPath(path).read_text()))


@dataclass(frozen=True)
class GraphReport:
    forbidden_edges: tuple[tuple[ComponentId, ComponentId], ...]
    internally_connected: bool

    @property
    def ok(self) -> bool:
        return not self.forbidden_edges and self.internally_connected


def edge_allowed(graph: ResourceGraph, first: ComponentId, second: ComponentId) -> bool:
    return frozenset({graph.kinds[first], graph.kinds[second]}) in ALLOWED_EDGE_KINDS


def _components(vertices: Iterable[ComponentId], adj) -> list[set[ComponentId]]:
    """Connected components of the subgraph induced by ``vertices``."""
    remaining = set(vertices)
    comps = []
    for root in sorted(remaining):
        if root not in remaining:
            continue
        comp = {root}
        remaining.discard(root)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w in remaining:
                    remaining.discard(w)
                    comp.add(w)
                    queue.append(w)
        comps.append(comp)
    return comps


def is_internally_connected(graph: ResourceGraph) -> bool:
    """Every vertex pair joined by a path whose interior avoids end nodes."""
    internal = [v for v in graph.kinds if graph.is_internal(v)]
    ends = graph.end_nodes
    if not internal:
        # only direct end-to-end adjacency can connect anything
        return all(
            b in graph.neighbors(a) for a, b in itertools.combinations(ends, 2)
        )
    if len(_components(internal, graph.adjacency)) != 1:
        return False
    return all(any(graph.is_internal(w) for w in graph.neighbors(e)) for e in ends)


def validate_graph(graph: ResourceGraph) -> GraphReport:
    forbidden = tuple(
        sorted(
            tuple(sorted(e))
            for e in graph.edges
            if not edge_allowed(graph, *tuple(e))
        )
    )
    return GraphReport(forbidden, is_internally_connected(graph))


# ---------------------------------------------------------------------------
# local areas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalAreaSet:
    areas: tuple[frozenset[ComponentId], ...]
    area_of: Mapping[ComponentId, int]

    def __len__(self) -> int:
        return len(self.areas)

    def internal_of(self, idx: int, graph: ResourceGraph) -> frozenset[ComponentId]:
        return frozenset(v for v in self.areas[idx] if graph.is_internal(v))


def compute_local_areas(graph: ResourceGraph) -> LocalAreaSet:
    """Components of the backbone-free graph, transit through end nodes forbidden.

    End nodes join the area of their EGI; when an end node touches EGIs in
    several areas it is filed under the area with the lowest index.
    """
    core = [
        v
        for v, k in graph.kinds.items()
        if k is not Kind.END_NODE and k is not Kind.BACKBONE
    ]
    core_set = set(core)
    adj = {v: [w for w in graph.neighbors(v) if w in core_set] for v in core}
    comps = sorted(_components(core, adj), key=min)
    area_of = {v: i for i, comp in enumerate(comps) for v in comp}
    members = [set(c) for c in comps]
    for e in graph.end_nodes:
        hits = sorted(area_of[w] for w in graph.neighbors(e) if w in area_of)
        if hits:
            area_of[e] = hits[0]
            members[hits[0]].add(e)
    return LocalAreaSet(tuple(frozenset(m) for m in members), area_of)


# ---------------------------------------------------------------------------
# allowed paths
# ---------------------------------------------------------------------------


def _canonical(path: Path) -> Path:
    return path if path[0] < path[-1] else tuple(reversed(path))


def _all_shortest(
    src: ComponentId, dst: ComponentId, allowed: set[ComponentId], adj
) -> list[Path]:
    """Every hop-shortest path from src to dst using only ``allowed`` vertices."""
    if src == dst:
        return [(src,)]
    dist = {src: 0}
    parents: dict[ComponentId, list[ComponentId]] = {src: []}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            continue
        for w in adj[u]:
            if w not in allowed:
                continue
            if w not in dist:
                dist[w] = dist[u] + 1
                parents[w] = [u]
                queue.append(w)
            elif dist[w] == dist[u] + 1:
                parents[w].append(u)
    if dst not in dist:
        return []
    out: list[Path] = []

    def unwind(node: ComponentId, suffix: list[ComponentId]) -> None:
        if node == src:
            out.append(tuple([src] + suffix[::-1]))
            return
        for p in parents[node]:
            unwind(p, suffix + [node])

    unwind(dst, [])
    return out


class _PathFinder:
    """Route-level search: backbones first, then shortest in-area segments."""

    def __init__(self, graph: ResourceGraph, areas: LocalAreaSet):
        self.graph = graph
        self.areas = areas
        self.internal_area = [areas.internal_of(i, graph) for i in range(len(areas))]
        self.backbones = graph.of_kind(Kind.BACKBONE)
        # backbone -> {area: [junctions of that area adjacent to it]}
        self.bb_ports: dict[ComponentId, dict[int, list[ComponentId]]] = {}
        for b in self.backbones:
            ports: dict[int, list[ComponentId]] = {}
            for j in sorted(graph.neighbors(b)):
                if j in areas.area_of:
                    ports.setdefault(areas.area_of[j], []).append(j)
            self.bb_ports[b] = ports
        self._core_cache: dict[tuple[ComponentId, ComponentId], list[Path]] = {}

    def _routes(self, a_src: int, a_dst: int) -> list[list]:
        """All minimum-backbone area routes [a0, b1, a1, ..., ak]."""
        if a_src == a_dst:
            return [[a_src]]
        to_dst = self._area_distance(a_dst)
        if a_src not in to_dst:
            return []
        routes: list[list] = []

        def extend(route: list) -> None:
            here = route[-1]
            if here == a_dst:
                routes.append(route)
                return
            for b in self.backbones:
                ports = self.bb_ports[b]
                if here not in ports:
                    continue
                for a2 in ports:
                    if a2 != here and to_dst.get(a2, -1) == to_dst[here] - 1:
                        extend(route + [b, a2])

        extend([a_src])
        return routes

    def _area_distance(self, target: int) -> dict[int, int]:
        """Backbone hops from every area to ``target``."""
        cache = self.__dict__.setdefault("_dist_cache", {})
        if target in cache:
            return cache[target]
        dist = {target: 0}
        queue = deque([target])
        while queue:
            a = queue.popleft()
            for b in self.backbones:
                ports = self.bb_ports[b]
                if a not in ports:
                    continue
                for a2 in ports:
                    if a2 not in dist:
                        dist[a2] = dist[a] + 1
                        queue.append(a2)
        cache[target] = dist
        return dist

    def core_paths(self, i_src: ComponentId, i_dst: ComponentId) -> list[Path]:
        """Candidate interiors between two EGIs (before per-area filtering)."""
        key = (i_src, i_dst)
        if key in self._core_cache:
            return self._core_cache[key]
        a_src = self.areas.area_of[i_src]
        a_dst = self.areas.area_of[i_dst]
        adj = self.graph.adjacency
        result: list[Path] = []
        for route in self._routes(a_src, a_dst):
            area_seq = route[0::2]
            bb_seq = route[1::2]
            # per area: list of candidate segments
            seg_options: list[list[Path]] = []
            for pos, area in enumerate(area_seq):
                allowed = set(self.internal_area[area])
                starts = [i_src] if pos == 0 else self.bb_ports[bb_seq[pos - 1]][area]
                stops = (
                    [i_dst]
                    if pos == len(area_seq) - 1
                    else self.bb_ports[bb_seq[pos]][area]
                )
                segs: list[Path] = []
                for s in starts:
                    for t in stops:
                        segs.extend(_all_shortest(s, t, allowed, adj))
                seg_options.append(segs)
            for combo in itertools.product(*seg_options):
                path: list[ComponentId] = list(combo[0])
                for b, seg in zip(bb_seq, combo[1:]):
                    path.append(b)
                    path.extend(seg)
                if len(set(path)) == len(path):
                    result.append(tuple(path))
        self._core_cache[key] = result
        return result


def _path_profile(path: Path, graph: ResourceGraph, area_of) -> tuple[int, dict[int, int]]:
    backbones = 0
    egis: dict[int, int] = {}
    for v in path[1:-1]:
        k = graph.kinds[v]
        if k is Kind.BACKBONE:
            backbones += 1
        elif k is Kind.EGI:
            a = area_of[v]
            egis[a] = egis.get(a, 0) + 1
        elif k is Kind.JUNCTION:
            egis.setdefault(area_of[v], 0)
    return backbones, egis


def allowed_paths_between(
    graph: ResourceGraph,
    src_end: ComponentId,
    dst_end: ComponentId,
    areas: LocalAreaSet | None = None,
    finder: _PathFinder | None = None,
) -> list[Path]:
    areas = areas or compute_local_areas(graph)
    finder = finder or _PathFinder(graph, areas)
    candidates: list[Path] = []
    for src_egi in sorted(w for w in graph.neighbors(src_end) if graph.kinds[w] is Kind.EGI):
        for dst_egi in sorted(w for w in graph.neighbors(dst_end) if graph.kinds[w] is Kind.EGI):
            for core in finder.core_paths(src_egi, dst_egi):
                candidates.append((src_end, *core, dst_end))
    if not candidates:
        return []
    profiles = [_path_profile(p, graph, areas.area_of) for p in candidates]
    min_backbones = min(b for b, _ in profiles)
    kept = [(p, prof) for p, prof in zip(candidates, profiles) if prof[0] == min_backbones]
    # minimum EGI count per area, over the minimum-backbone paths that visit it
    min_egis: dict[int, int] = {}
    for _, (_, per_area) in kept:
        for a, n in per_area.items():
            min_egis[a] = min(min_egis.get(a, n), n)
    out = {
        _canonical(p)
        for p, (_, per_area) in kept
        if all(n == min_egis[a] for a, n in per_area.items())
    }
    return sorted(out)


def enumerate_allowed_paths(
    graph: ResourceGraph, areas: LocalAreaSet | None = None
) -> list[Path]:
    """All allowed paths, one canonical orientation per unordered end-node pair."""
    areas = areas or compute_local_areas(graph)
    finder = _PathFinder(graph, areas)
    out: list[Path] = []
    for e, e2 in itertools.combinations(graph.end_nodes, 2):
        out.extend(allowed_paths_between(graph, e, e2, areas, finder))
    return sorted(set(out))


# ---------------------------------------------------------------------------
# path partition
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class CellKey:
    """Partition cell key; the natural ordering is backbone, junction, interface."""

    rank: int
    index: int

    BACKBONE_RANK = 0
    JUNCTION_RANK = 1
    INTERFACE_RANK = 2

    @classmethod
    def backbone(cls) -> "CellKey":
        return cls(0, 0)

    @classmethod
    def junction(cls, area: int) -> "CellKey":
        return cls(1, area)

    @classmethod
    def interface(cls, egi: ComponentId) -> "CellKey":
        return cls(2, egi)

    @property
    def kind(self) -> str:
        return ("backbone", "junction", "interface")[self.rank]

    def __str__(self) -> str:
        if self.rank == 0:
            return "backbone"
        return f"{self.kind}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "CellKey":
        if text == "backbone":
            return cls.backbone()
        kind, idx = text.split(":")
        return cls(("backbone", "junction", "interface").index(kind), int(idx))


@dataclass(frozen=True)
class PathPartition:
    cells: Mapping[CellKey, frozenset[Path]]
    xi: Mapping[CellKey, frozenset[ComponentId]]
    version: int = 0
    cell_of: Mapping[Path, CellKey] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lookup = {}
        for key, paths in self.cells.items():
            for p in paths:
                lookup[p] = key
        object.__setattr__(self, "cell_of", lookup)

    @property
    def paths(self) -> list[Path]:
        return sorted(self.cell_of)

    def with_version(self, version: int) -> "PathPartition":
        return PathPartition(dict(self.cells), dict(self.xi), version)

    def greater(self, key: CellKey) -> list[CellKey]:
        """Cells whose associated resources strictly contain those of ``key``."""
        mine = self.xi[key]
        return sorted(k for k, x in self.xi.items() if k != key and mine < x)


def internal_resources(path: Path) -> Path:
    return path[1:-1]


def build_path_partition(
    paths: Iterable[Path], areas: LocalAreaSet, graph: ResourceGraph, version: int = 0
) -> PathPartition:
    cells: dict[CellKey, set[Path]] = {CellKey.backbone(): set()}
    for a in range(len(areas)):
        cells[CellKey.junction(a)] = set()
    for i in graph.of_kind(Kind.EGI):
        cells[CellKey.interface(i)] = set()

    for p in paths:
        inner = internal_resources(p)
        kinds = [graph.kinds[v] for v in inner]
        if Kind.BACKBONE in kinds:
            cells[CellKey.backbone()].add(p)
            continue
        junctions = [v for v, k in zip(inner, kinds) if k is Kind.JUNCTION]
        if junctions:
            cells[CellKey.junction(areas.area_of[junctions[0]])].add(p)
            continue
        egis = [v for v, k in zip(inner, kinds) if k is Kind.EGI]
        if len(egis) != 1:
            raise InternalError(f"path {p} fits no partition cell")
        cells[CellKey.interface(egis[0])].add(p)

    xi = {
        k: frozenset(v for p in ps for v in internal_resources(p)) for k, ps in cells.items()
    }
    return PathPartition({k: frozenset(v) for k, v in cells.items()}, xi, version)


def well_behaved(xi: Mapping[CellKey, frozenset[ComponentId]]) -> bool:
    """Distinct non-empty resource sets, and intersecting sets are nested."""
    sets = [x for x in xi.values() if x]
    if len(set(sets)) != len(sets):
        return False
    for a, b in itertools.combinations(sets, 2):
        if a & b and not (a < b or b < a):
            return False
    return True


@dataclass(frozen=True)
class Network:
    """Bundle of everything derived from one graph."""

    graph: ResourceGraph
    areas: LocalAreaSet
    partition: PathPartition

    @classmethod
    def from_graph(cls, graph: ResourceGraph, version: int = 0) -> "Network":
        report = validate_graph(graph)
        if not report.ok:
            raise ValueError(
                f"invalid resource graph: forbidden={list(report.forbidden_edges)}, "
                f"internally_connected={report.internally_connected}"
            )
        areas = compute_local_areas(graph)
        paths = enumerate_allowed_paths(graph, areas)
        return cls(graph, areas, build_path_partition(paths, areas, graph, version))

    def paths_between(self, first: ComponentId, second: ComponentId) -> list[Path]:
        key = (first, second) if first < second else (second, first)
        return [p for p in self._pair_index().get(key, [])]

    def _pair_index(self) -> dict[tuple[ComponentId, ComponentId], list[Path]]:
        cache = self.__dict__.get("_pairs")
        if cache is None:
            cache = {}
            for p in self.partition.paths:
                cache.setdefault((p[0], p[-1]), []).append(p)
            object.__setattr__(self, "_pairs", cache)
        return cache


# ---------------------------------------------------------------------------
# fixed and random topologies
# ---------------------------------------------------------------------------


def dumbbell() -> ResourceGraph:
    """Two metropolitan hubs joined by one backbone; 15 end nodes, 5 per EGI.

    Ids: EGIs 1-3, junctions 4-5, backbone 6, end nodes 10-24.  Hub one holds
    EGIs 1 and 2 behind junction 4, hub two holds EGI 3 behind junction 5.
    """
    kinds: dict[int, Kind] = {1: Kind.EGI, 2: Kind.EGI, 3: Kind.EGI}
    kinds.update({4: Kind.JUNCTION, 5: Kind.JUNCTION, 6: Kind.BACKBONE})
    edges = [(1, 4), (2, 4), (4, 6), (6, 5), (5, 3)]
    node = 10
    for egi in (1, 2, 3):
        for _ in range(5):
            kinds[node] = Kind.END_NODE
            edges.append((node, egi))
            node += 1
    # one server per hub so that client/server pairings exist
    return ResourceGraph.build(kinds, edges, discoverable=[10, 20])


def random_topology(
    backbones: int,
    local_areas: int,
    end_nodes: int,
    seed: int,
    discoverable_fraction: float = 0.2,
) -> ResourceGraph:
    """Random member of the topology family with exact component counts.

    Each area receives an even share of the end nodes spread over one to three
    EGIs.  Backbones first form a random spanning tree over the areas, the rest
    join random area pairs.  Every backbone endpoint gets its own junction,
    which is wired to every EGI of its area.
    """
    if local_areas < 1 or backbones < 0 or end_nodes < 2:
        raise InfeasibleTopology("need >=1 local area, >=0 backbones, >=2 end nodes")
    if backbones < local_areas - 1:
        raise InfeasibleTopology(
            f"{local_areas} local areas need at least {local_areas - 1} backbones"
        )
    if end_nodes < local_areas:
        raise InfeasibleTopology("every local area needs at least one end node")
    rng = random.Random(seed)
    ids = itertools.count(1)
    kinds: dict[int, Kind] = {}
    edges: list[tuple[int, int]] = []

    base, extra = divmod(end_nodes, local_areas)
    area_egis: list[list[int]] = []
    ends: list[int] = []
    for a in range(local_areas):
        n_end = base + (1 if a < extra else 0)
        n_egi = min(rng.randint(1, 3), n_end)
        egis = []
        for _ in range(n_egi):
            v = next(ids)
            kinds[v] = Kind.EGI
            egis.append(v)
        area_egis.append(egis)
        order = list(range(n_end))
        rng.shuffle(order)
        for slot in range(n_end):
            e = next(ids)
            kinds[e] = Kind.END_NODE
            ends.append(e)
            edges.append((e, egis[order[slot] % n_egi]))

    # backbone endpoints (area pairs)
    pairs: list[tuple[int, int]] = []
    perm = list(range(local_areas))
    rng.shuffle(perm)
    for pos in range(1, local_areas):
        pairs.append((perm[rng.randrange(pos)], perm[pos]))
    while len(pairs) < backbones:
        if local_areas == 1:
            pairs.append((0, 0))
        else:
            pairs.append(tuple(rng.sample(range(local_areas), 2)))  # type: ignore[arg-type]

    area_junctions: list[list[int]] = [[] for _ in range(local_areas)]
    for a1, a2 in pairs:
        b = next(ids)
        kinds[b] = Kind.BACKBONE
        for a in (a1, a2):
            j = next(ids)
            kinds[j] = Kind.JUNCTION
            area_junctions[a].append(j)
            edges.append((j, b))
    for a in range(local_areas):
        if not area_junctions[a] and len(area_egis[a]) > 1:
            j = next(ids)
            kinds[j] = Kind.JUNCTION
            area_junctions[a].append(j)
        for j in area_junctions[a]:
            for i in area_egis[a]:
                edges.append((i, j))

    n_disc = int(round(discoverable_fraction * end_nodes))
    disc = rng.sample(ends, n_disc) if n_disc else []
    graph = ResourceGraph.build(kinds, edges, disc)
    if not validate_graph(graph).ok:  # pragma: no cover - construction guarantees it
        raise InfeasibleTopology("generated graph failed validation")
    return graph


def iter_pairs(paths: Iterable[Path]) -> Iterator[tuple[ComponentId, ComponentId]]:
    seen = set()
    for p in paths:
        key = (p[0], p[-1])
        if key not in seen:
            seen.add(key)
            yield key
