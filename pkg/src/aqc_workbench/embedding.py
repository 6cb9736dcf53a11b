"""Grid embedding of planar degree-3 graphs and the switchable-coupler netlist.

A layout places each logical vertex on a grid site and routes each edge as a
vertex-disjoint grid path.  The netlist turns every path into a ferromagnetic
chain with a single antiferromagnetic coupler, which is then compiled into a
physical Ising model over the occupied sites.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .graphs import Graph, max_degree, spins_from_index
from .hamiltonian import ENERGY_TOL, IsingModel, ising_to_diagonal

FM, AFM, OFF = "fm", "afm", "off"
FIELD_MODES = ("compensated", "homogeneous")
BRUTE_FORCE_SITES = 22
ROUTING_ITERATIONS = 60

Point = tuple[int, int]


class EmbeddingError(ValueError):
    pass


def _adjacent(a: Point, b: Point) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


def _coupler_key(a: Point, b: Point) -> tuple[Point, Point]:
    return (a, b) if a <= b else (b, a)


@dataclass
class GridLayout:
    width: int
    height: int
    vertex_map: dict[int, Point]
    edge_paths: dict[tuple[int, int], list[Point]]

    @property
    def area(self) -> int:
        return self.width * self.height

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "vertex_map": {str(v): list(p) for v, p in sorted(self.vertex_map.items())},
            "edge_paths": [
                {"edge": [u, v], "path": [list(p) for p in path]}
                for (u, v), path in sorted(self.edge_paths.items())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridLayout":
        return cls(
            int(d["width"]),
            int(d["height"]),
            {int(v): tuple(p) for v, p in d["vertex_map"].items()},
            {tuple(e["edge"]): [tuple(p) for p in e["path"]] for e in d["edge_paths"]},
        )


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_embedding(g: Graph, q: GridLayout) -> Verdict:
    """Accept iff ``q`` is a valid disjoint-path grid embedding of ``g`` within 9 n^2 sites."""
    if sorted(q.vertex_map) != list(range(g.n)):
        return Verdict(False, "vertex_map must cover exactly the graph vertices")
    sites = list(q.vertex_map.values())
    if len(set(sites)) != len(sites):
        return Verdict(False, "injectivity: two vertices share a grid site")
    if q.area > 9 * g.n ** 2:
        return Verdict(False, f"area {q.area} exceeds 9n^2 = {9 * g.n ** 2}")

    def inside(p: Point) -> bool:
        return 0 <= p[0] < q.width and 0 <= p[1] < q.height

    if not all(inside(p) for p in sites):
        return Verdict(False, "vertex site outside the grid")
    keys = {(min(u, v), max(u, v)) for u, v in q.edge_paths}
    if len(keys) != len(q.edge_paths) or keys != set(g.edges):
        return Verdict(False, "contraction: edge paths do not reproduce the graph's edge set")
    vertex_sites = set(sites)
    used: dict[Point, tuple[int, int]] = {}
    for (u, v), path in sorted(q.edge_paths.items()):
        ends = {q.vertex_map[u], q.vertex_map[v]}
        if len(path) < 2 or {path[0], path[-1]} != ends:
            return Verdict(False, f"path of edge ({u}, {v}) does not join its endpoints")
        for a, b in zip(path, path[1:]):
            if not _adjacent(a, b):
                return Verdict(False, f"path of edge ({u}, {v}) has non-adjacent steps {a} -> {b}")
        for p in path:
            if not inside(p):
                return Verdict(False, f"path of edge ({u}, {v}) leaves the grid at {p}")
        for p in path[1:-1]:
            if p in vertex_sites:
                return Verdict(False, f"disjointness: path of edge ({u}, {v}) crosses vertex site {p}")
            if p in used:
                return Verdict(False, f"disjointness: edges {used[p]} and ({u}, {v}) share site {p}")
            used[p] = (u, v)
    return Verdict(True)


# --- placement and routing --------------------------------------------------


def _planar_ranks(g: Graph) -> dict[int, Point]:
    """Rank-compressed straight-line planar positions (row-major fallback for non-planar input)."""
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edge_list())
    planar, emb = nx.check_planarity(G)
    if planar and g.n >= 1:
        pos = nx.combinatorial_embedding_to_pos(emb)
    else:
        side = max(1, int(np.ceil(np.sqrt(g.n))))
        pos = {v: (v % side, v // side) for v in range(g.n)}
    xs = {x: i for i, x in enumerate(sorted({p[0] for p in pos.values()}))}
    ys = {y: i for i, y in enumerate(sorted({p[1] for p in pos.values()}))}
    return {v: (xs[pos[v][0]], ys[pos[v][1]]) for v in range(g.n)}


def _route(edges, vertex_map, width, height):
    vertex_sites = {p: v for v, p in vertex_map.items()}
    history: dict[Point, float] = {}
    paths: dict[tuple[int, int], list[Point]] = {}
    present = 1.0
    for _ in range(ROUTING_ITERATIONS):
        occupancy: dict[Point, int] = {}
        for path in paths.values():
            for p in path[1:-1]:
                occupancy[p] = occupancy.get(p, 0) + 1
        for e in edges:
            old = paths.pop(e, None)
            if old is not None:
                for p in old[1:-1]:
                    occupancy[p] -= 1
            src, dst = vertex_map[e[0]], vertex_map[e[1]]
            path = _cheapest_path(src, dst, vertex_sites, occupancy, history, present, width, height)
            if path is None:
                return None
            paths[e] = path
            for p in path[1:-1]:
                occupancy[p] = occupancy.get(p, 0) + 1
        overused = [p for p, c in occupancy.items() if c > 1]
        if not overused:
            return paths
        for p in overused:
            history[p] = history.get(p, 0.0) + 1.0
        present *= 1.6
    return None


def _cheapest_path(src, dst, vertex_sites, occupancy, history, present, width, height):
    dist = {src: 0.0}
    prev: dict[Point, Point] = {}
    heap = [(0.0, src)]
    while heap:
        d, p = heapq.heappop(heap)
        if p == dst:
            break
        if d > dist[p]:
            continue
        x, y = p
        for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if not (0 <= nb[0] < width and 0 <= nb[1] < height):
                continue
            if nb != dst and nb in vertex_sites:
                continue
            cost = 1.0 if nb == dst else (1.0 + history.get(nb, 0.0)) * (1.0 + present * occupancy.get(nb, 0))
            nd = d + cost
            if nd < dist.get(nb, np.inf) - 1e-12:
                dist[nb] = nd
                prev[nb] = p
                heapq.heappush(heap, (nd, nb))
    if dst not in prev and dst != src:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return path[::-1]


def _trim(vertex_map, paths) -> GridLayout:
    pts = list(vertex_map.values()) + [p for path in paths.values() for p in path]
    if not pts:
        return GridLayout(0, 0, {}, {})
    x0 = min(p[0] for p in pts)
    y0 = min(p[1] for p in pts)
    shift = lambda p: (p[0] - x0, p[1] - y0)  # noqa: E731
    vm = {v: shift(p) for v, p in vertex_map.items()}
    ep = {}
    for (u, v), path in paths.items():
        path = [shift(p) for p in path]
        ep[(u, v)] = path if path[0] == vm[u] else path[::-1]
    width = max(p[0] for p in pts) - x0 + 1
    height = max(p[1] for p in pts) - y0 + 1
    return GridLayout(width, height, vm, ep)


def embed_grid(g: Graph) -> GridLayout:
    """Deterministic grid embedding with area at most 9 n^2.

    Vertices go to a rank-compressed planar straight-line drawing spread by a
    factor 1, 2 or 3 (most compact first); edges are routed by negotiated
    congestion shortest paths.  Raises EmbeddingError if no scale routes.
    """
    if max_degree(g) > 3:
        raise EmbeddingError(f"maximum degree {max_degree(g)} exceeds 3")
    ranks = _planar_ranks(g)
    edges = g.edge_list()
    for scale in (1, 2, 3):
        margin = 1 if scale > 1 else 0
        vertex_map = {v: (margin + scale * x, margin + scale * y) for v, (x, y) in ranks.items()}
        width = max((p[0] for p in vertex_map.values()), default=0) + 1 + margin
        height = max((p[1] for p in vertex_map.values()), default=0) + 1 + margin
        paths = _route(edges, vertex_map, width, height)
        if paths is None:
            continue
        layout = _trim(vertex_map, paths)
        if verify_embedding(g, layout):
            return layout
    raise EmbeddingError("routing failed within the 9n^2 area budget (graph may be non-planar)")


# --- netlist ----------------------------------------------------------------


@dataclass
class HardwareNetlist:
    sites: list[Point]
    couplers: dict[tuple[Point, Point], str]
    chain_of: dict[Point, int]
    root_of: dict[int, Point]
    logical_edge_coupler: dict[tuple[int, int], tuple[Point, Point]]
    edge_paths: dict[tuple[int, int], list[Point]] = field(default_factory=dict)
    width: int = 0
    height: int = 0

    @property
    def n_logical(self) -> int:
        return len(self.root_of)

    def site_index(self) -> dict[Point, int]:
        return {p: i for i, p in enumerate(self.sites)}

    def chains(self) -> dict[int, list[Point]]:
        out: dict[int, list[Point]] = {v: [] for v in self.root_of}
        for p in self.sites:
            out[self.chain_of[p]].append(p)
        return out

    def count(self, kind: str) -> int:
        return sum(1 for k in self.couplers.values() if k == kind)

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "sites": [{"site": list(p), "chain": self.chain_of[p]} for p in self.sites],
            "roots": {str(v): list(p) for v, p in sorted(self.root_of.items())},
            "couplers": [{"a": list(a), "b": list(b), "state": s} for (a, b), s in sorted(self.couplers.items())],
            "logical_edge_coupler": [
                {"edge": list(e), "a": list(c[0]), "b": list(c[1])}
                for e, c in sorted(self.logical_edge_coupler.items())
            ],
            "edge_paths": [
                {"edge": list(e), "path": [list(p) for p in path]} for e, path in sorted(self.edge_paths.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "HardwareNetlist":
        sites = [tuple(s["site"]) for s in d["sites"]]
        return cls(
            sites=sites,
            couplers={_coupler_key(tuple(c["a"]), tuple(c["b"])): c["state"] for c in d["couplers"]},
            chain_of={tuple(s["site"]): int(s["chain"]) for s in d["sites"]},
            root_of={int(v): tuple(p) for v, p in d["roots"].items()},
            logical_edge_coupler={tuple(e["edge"]): (tuple(e["a"]), tuple(e["b"])) for e in d["logical_edge_coupler"]},
            edge_paths={tuple(e["edge"]): [tuple(p) for p in e["path"]] for e in d["edge_paths"]},
            width=int(d["width"]),
            height=int(d["height"]),
        )


def afm_index(couplers_on_path: int) -> int:
    """0-based index of the AFM coupler on a path with that many couplers.

    The middle coupler; for an even count the one nearer the lower-indexed endpoint.
    """
    if couplers_on_path < 1:
        raise ValueError("a path has at least one coupler")
    return (couplers_on_path - 1) // 2


def layout_to_netlist(q: GridLayout) -> HardwareNetlist:
    chain_of = {p: v for v, p in q.vertex_map.items()}
    couplers: dict[tuple[Point, Point], str] = {}
    afm = {}
    paths = {}
    for (u, v), path in sorted(q.edge_paths.items()):
        if path[0] != q.vertex_map[u]:
            path = path[::-1]
        paths[(u, v)] = path
        k = afm_index(len(path) - 1)
        for i, (a, b) in enumerate(zip(path, path[1:])):
            key = _coupler_key(a, b)
            couplers[key] = AFM if i == k else FM
            if i == k:
                afm[(u, v)] = key
        for i, p in enumerate(path[1:-1], start=1):
            chain_of[p] = u if i <= k else v
    sites = sorted(chain_of)
    occupied = set(sites)
    for p in sites:
        for nb in ((p[0] + 1, p[1]), (p[0], p[1] + 1)):
            if nb in occupied:
                couplers.setdefault(_coupler_key(p, nb), OFF)
    return HardwareNetlist(
        sites=sites,
        couplers=dict(sorted(couplers.items())),
        chain_of=chain_of,
        root_of=dict(sorted(q.vertex_map.items())),
        logical_edge_coupler=afm,
        edge_paths=paths,
        width=q.width,
        height=q.height,
    )


def check_netlist(nl: HardwareNetlist, g: Graph) -> Verdict:
    """Netlist invariants: one AFM coupler per edge, FM-connected chains, FM count = sum(L - 1)."""
    if nl.count(AFM) != g.m or set(nl.logical_edge_coupler) != set(g.edges):
        return Verdict(False, "expected exactly one AFM coupler per logical edge")
    if any(nl.couplers[c] != AFM for c in nl.logical_edge_coupler.values()):
        return Verdict(False, "logical edge coupler is not AFM")
    expected_fm = sum(len(p) - 2 for p in nl.edge_paths.values())
    if nl.count(FM) != expected_fm:
        return Verdict(False, f"{nl.count(FM)} FM couplers, expected {expected_fm}")
    for v, members in nl.chains().items():
        comp = nx.Graph()
        comp.add_nodes_from(members)
        comp.add_edges_from(c for c, s in nl.couplers.items() if s == FM and nl.chain_of[c[0]] == v)
        if not nx.is_connected(comp):
            return Verdict(False, f"chain of vertex {v} is not FM-connected")
    for (a, b), s in nl.couplers.items():
        if s == FM and nl.chain_of[a] != nl.chain_of[b]:
            return Verdict(False, f"FM coupler {a}-{b} joins different chains")
    return Verdict(True)


def netlist_to_ising(nl: HardwareNetlist, logical: IsingModel, chain_strength: float,
                     field_mode: str = "compensated") -> IsingModel:
    """Physical model over ``nl.sites``: FM couplers -F, AFM couplers J_uv, off couplers absent."""
    if not chain_strength > 0:
        raise ValueError("chain strength must be positive")
    if field_mode not in FIELD_MODES:
        raise ValueError(f"unknown field mode {field_mode!r}; choose from {FIELD_MODES}")
    if logical.n != nl.n_logical:
        raise ValueError("logical model size does not match the netlist")
    index = nl.site_index()
    h = np.zeros(len(nl.sites))
    if field_mode == "compensated":
        for v, p in nl.root_of.items():
            h[index[p]] = logical.h[v]
    else:
        for p in nl.sites:
            h[index[p]] = logical.h[nl.chain_of[p]]
    afm_edge = {c: e for e, c in nl.logical_edge_coupler.items()}
    J = {}
    for (a, b), state in nl.couplers.items():
        if state == FM:
            J[(index[a], index[b])] = -float(chain_strength)
        elif state == AFM:
            J[(index[a], index[b])] = logical.J.get(afm_edge[(a, b)], 0.0)
    return IsingModel(len(nl.sites), h, J)


def encode_logical(spins, nl: HardwareNetlist) -> np.ndarray:
    """Replicate a logical configuration along every chain."""
    return np.array([spins[nl.chain_of[p]] for p in nl.sites], dtype=np.int8)


def decode_chains(physical, nl: HardwareNetlist) -> tuple[np.ndarray, list[int]]:
    """Majority vote per chain (ties to +1) and the sorted list of broken chains."""
    physical = np.asarray(physical)
    if physical.shape != (len(nl.sites),):
        raise ValueError("physical configuration does not match the netlist")
    index = nl.site_index()
    logical = np.zeros(nl.n_logical, dtype=np.int8)
    broken = []
    for v, members in sorted(nl.chains().items()):
        vals = physical[[index[p] for p in members]]
        total = int(vals.sum())
        logical[v] = 1 if total >= 0 else -1
        if abs(total) != len(vals):
            broken.append(v)
    return logical, broken


# --- exact physical ground states -------------------------------------------


def _brute_force_ground(m: IsingModel, tol: float) -> tuple[float, list[np.ndarray]]:
    hp = ising_to_diagonal(m)
    return hp.ground_energy(), [spins_from_index(int(b), m.n) for b in hp.ground_indices(tol)]


def _path_tables(m: IsingModel, path_idx: list[int], tol: float):
    """Min-plus transfer over a path's interior for each pair of end spins.

    Returns {(s_start, s_end): (energy, [interior spin tuples])} where energy
    includes every coupling on the path and the interior fields.
    """
    interior = path_idx[1:-1]
    couplings = [m.J.get((min(a, b), max(a, b)), 0.0) for a, b in zip(path_idx, path_idx[1:])]
    out = {}
    for s0, s1 in itertools.product((1, -1), repeat=2):
        # best[s] = (energy, list of partial assignments) for the last site fixed at s
        best = {s0: (0.0, [()])}
        for k, site in enumerate(interior):
            nxt = {}
            for s in (1, -1):
                cands = [(e + couplings[k] * sp * s + m.h[site] * s, parts) for sp, (e, parts) in best.items()]
                emin = min(c[0] for c in cands)
                parts = [p + (s,) for e, ps in cands if e <= emin + tol for p in ps]
                nxt[s] = (emin, parts)
            best = nxt
        last = couplings[-1]
        cands = [(e + last * sp * s1, parts) for sp, (e, parts) in best.items()]
        emin = min(c[0] for c in cands)
        out[(s0, s1)] = (emin, [p for e, ps in cands if e <= emin + tol for p in ps])
    return out


def physical_ground_states(m: IsingModel, nl: HardwareNetlist, method: str = "auto",
                           tol: float = ENERGY_TOL, max_states: int = 100_000) -> tuple[float, list[np.ndarray]]:
    """Every ground configuration of a physical model compiled from ``nl``.

    "path" enumerates root spins and minimizes each edge path exactly by a
    transfer-matrix recursion; "brute" enumerates all sites.  "auto" uses
    brute force up to BRUTE_FORCE_SITES sites.
    """
    if method == "auto":
        method = "brute" if m.n <= BRUTE_FORCE_SITES else "path"
    if method == "brute":
        return _brute_force_ground(m, tol)
    if method != "path":
        raise ValueError(f"unknown method {method!r}")
    index = nl.site_index()
    roots = [index[nl.root_of[v]] for v in range(nl.n_logical)]
    path_sites = {e: [index[p] for p in path] for e, path in nl.edge_paths.items()}
    on_path = {(min(a, b), max(a, b)) for ps in path_sites.values() for a, b in zip(ps, ps[1:])}
    if any(key not in on_path for key, val in m.J.items() if val != 0.0):
        raise ValueError("physical model has couplings off the netlist paths")
    tables = {e: _path_tables(m, ps, tol) for e, ps in path_sites.items()}
    # isolated interior sites cannot exist; every non-root site lies on exactly one path
    best_e, best_roots = np.inf, []
    for bits in range(1 << nl.n_logical):
        s = [1 - 2 * ((bits >> v) & 1) for v in range(nl.n_logical)]
        e = sum(m.h[roots[v]] * s[v] for v in range(nl.n_logical))
        for (u, v), tab in tables.items():
            e += tab[(s[u], s[v])][0]
        if e < best_e - tol:
            best_e, best_roots = e, [s]
        elif e <= best_e + tol:
            best_roots.append(s)
    # drop roots that only tied with a later, lower minimum
    states = []
    for s in best_roots:
        e = sum(m.h[roots[v]] * s[v] for v in range(nl.n_logical))
        e += sum(tab[(s[u], s[v])][0] for (u, v), tab in tables.items())
        if e > best_e + tol:
            continue
        options = [tables[edge][(s[edge[0]], s[edge[1]])][1] for edge in sorted(tables)]
        for combo in itertools.product(*options):
            cfg = np.zeros(m.n, dtype=np.int8)
            for v in range(nl.n_logical):
                cfg[roots[v]] = s[v]
            for edge, interior in zip(sorted(tables), combo):
                for site, spin in zip(path_sites[edge][1:-1], interior):
                    cfg[site] = spin
            states.append(cfg)
            if len(states) > max_states:
                raise ValueError(f"more than {max_states} degenerate ground states")
    return float(best_e), states


def decoded_ground_family(m: IsingModel, nl: HardwareNetlist, method: str = "auto"):
    """Decoded logical ground configurations and whether any ground state had a broken chain."""
    _, states = physical_ground_states(m, nl, method)
    decoded, any_broken = set(), False
    for cfg in states:
        logical, broken = decode_chains(cfg, nl)
        decoded.add(tuple(int(x) for x in logical))
        any_broken |= bool(broken)
    return sorted(decoded), any_broken


# --- ASCII diagram ----------------------------------------------------------


def _label(v: int) -> str:
    return "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"[v] if v < 62 else "#"


def netlist_ascii(nl: HardwareNetlist) -> str:
    """Grid diagram: vertex labels at roots, '.' for dummy sites; FM '-'/'|', AFM '~'/'!', off blank."""
    rows = [[" "] * (2 * nl.width - 1) for _ in range(2 * nl.height - 1)] if nl.width else []
    roots = {p: v for v, p in nl.root_of.items()}
    for p in nl.sites:
        rows[2 * p[1]][2 * p[0]] = _label(roots[p]) if p in roots else "."
    for (a, b), state in nl.couplers.items():
        if state == OFF:
            continue
        y, x = a[1] + b[1], a[0] + b[0]
        horizontal = a[1] == b[1]
        rows[y][x] = ("-" if horizontal else "|") if state == FM else ("~" if horizontal else "!")
    return "\n".join("".join(r).rstrip() for r in rows)
