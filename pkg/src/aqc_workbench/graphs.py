"""Combinatorial instances, random ensembles and exhaustive oracles.

Basis-state convention used across the package: bit ``i`` of a basis index
is qubit/vertex/variable ``i``; bit value 0 is spin +1 and bit value 1 is
spin -1.  For Boolean problems the bit value is the truth value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ENUMERATION_LIMIT = 24


class EnumerationLimitError(ValueError):
    """Raised when an exhaustive oracle is asked to scan more than 2**24 states."""


class GenerationError(RuntimeError):
    pass


def _check_enumerable(n: int, limit: int = ENUMERATION_LIMIT) -> None:
    if n > limit:
        raise EnumerationLimitError(f"n={n} exceeds the enumeration guard n <= {limit}")


def basis_indices(n: int) -> np.ndarray:
    _check_enumerable(n)
    return np.arange(1 << n, dtype=np.int64)


def bit_column(indices: np.ndarray, i: int) -> np.ndarray:
    return (indices >> i) & 1


def spins_from_index(index: int, n: int) -> np.ndarray:
    """Spin configuration (+1/-1, int8) for one basis index."""
    bits = (int(index) >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def index_from_spins(spins: Sequence[int]) -> int:
    idx = 0
    for i, s in enumerate(spins):
        if s not in (1, -1):
            raise ValueError(f"spin {i} is {s}, expected +1 or -1")
        if s == -1:
            idx |= 1 << i
    return idx


def spin_table(n: int) -> np.ndarray:
    """All 2**n configurations as a (2**n, n) int8 array in basis order."""
    idx = basis_indices(n)
    bits = (idx[:, None] >> np.arange(n)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        normalized = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            normalized.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(normalized))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        edges = list(edges)
        keyed = {(min(u, v), max(u, v)) for u, v in edges}
        if len(keyed) != len(edges):
            raise ValueError("duplicate edge in edge list")
        return cls(n, frozenset(keyed))

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls(n, frozenset((u, v) for u in range(n) for v in range(u + 1, n)))

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls(n, frozenset((i, i + 1) for i in range(n - 1)))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls(n, frozenset((min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, frozenset())

    @classmethod
    def grid(cls, rows: int, cols: int) -> "Graph":
        """rows x cols square lattice, vertex r * cols + c."""
        edges = [(r * cols + c, r * cols + c + 1) for r in range(rows) for c in range(cols - 1)]
        edges += [(r * cols + c, (r + 1) * cols + c) for r in range(rows - 1) for c in range(cols)]
        return cls.from_edges(rows * cols, edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edge_list():
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edge_list())
        return g


def max_degree(g: Graph) -> int:
    return max(g.degrees(), default=0)


def complement(g: Graph) -> Graph:
    return Graph(
        g.n,
        frozenset((u, v) for u in range(g.n) for v in range(u + 1, g.n) if (u, v) not in g.edges),
    )


@dataclass(frozen=True)
class CnfFormula:
    """3-CNF formula; each literal is ``(variable, negated)``."""

    n: int
    clauses: tuple = ()

    def __post_init__(self) -> None:
        clauses = []
        for c in self.clauses:
            lits = tuple((int(v), bool(neg)) for v, neg in c)
            vars_ = [v for v, _ in lits]
            if len(lits) != 3 or len(set(vars_)) != 3:
                raise ValueError(f"clause {c} must reference 3 distinct variables")
            if any(not 0 <= v < self.n for v in vars_):
                raise ValueError(f"clause {c} out of range for n={self.n}")
            clauses.append(lits)
        object.__setattr__(self, "clauses", tuple(clauses))

    @property
    def m(self) -> int:
        return len(self.clauses)


@dataclass(frozen=True)
class ExactCoverInstance:
    n: int
    clauses: tuple = ()

    def __post_init__(self) -> None:
        clauses = []
        for c in self.clauses:
            c = tuple(int(v) for v in c)
            if len(c) != 3 or len(set(c)) != 3:
                raise ValueError(f"clause {c} must hold 3 distinct bit indices")
            if any(not 0 <= v < self.n for v in c):
                raise ValueError(f"clause {c} out of range for n={self.n}")
            clauses.append(c)
        object.__setattr__(self, "clauses", tuple(clauses))

    @property
    def m(self) -> int:
        return len(self.clauses)


# --- random ensembles -------------------------------------------------------


def gen_random_graph(n: int, p: float, seed=None) -> Graph:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    keep = rng.random(len(pairs)) < p
    return Graph(n, frozenset(pr for pr, k in zip(pairs, keep) if k))


def clause_count(n: int, ratio: float) -> int:
    # Round half up: 4.25 * 10 = 42.5 -> 43.
    return int(math.floor(ratio * n + 0.5))


def gen_random_3sat(n: int, ratio: float = 4.25, seed=None) -> CnfFormula:
    if n < 3:
        raise ValueError("random 3-SAT needs at least 3 variables")
    if ratio <= 0:
        raise ValueError("clause ratio must be positive")
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(clause_count(n, ratio)):
        vars_ = rng.choice(n, size=3, replace=False)
        negs = rng.random(3) < 0.5
        clauses.append(tuple((int(v), bool(s)) for v, s in zip(vars_, negs)))
    return CnfFormula(n, tuple(clauses))


def _exact_cover_mask(idx: np.ndarray, clause: tuple[int, int, int]) -> np.ndarray:
    a, b, c = clause
    return (bit_column(idx, a) + bit_column(idx, b) + bit_column(idx, c)) == 1


def gen_exact_cover_usa(n: int, seed=None, max_restarts: int = 1000) -> ExactCoverInstance:
    """Random EXACT COVER instance with a unique satisfying assignment.

    Clauses are added one at a time while tracking the surviving assignments;
    generation stops at exactly one survivor and restarts on extinction.
    """
    if n < 3:
        raise ValueError("exact cover needs at least 3 bits")
    _check_enumerable(n)
    rng = np.random.default_rng(seed)
    idx = basis_indices(n)
    # an attempt that stalls (e.g. n = 3, where only one clause exists) is restarted
    clause_cap = 10 * n * n
    for _ in range(max_restarts + 1):
        alive = np.ones(idx.size, dtype=bool)
        clauses: list[tuple[int, int, int]] = []
        while len(clauses) < clause_cap:
            clause = tuple(sorted(int(v) for v in rng.choice(n, size=3, replace=False)))
            alive = alive & _exact_cover_mask(idx, clause)
            clauses.append(clause)
            count = int(alive.sum())
            if count == 1:
                return ExactCoverInstance(n, tuple(clauses))
            if count == 0:
                break
    raise GenerationError(f"no USA instance for n={n} within {max_restarts} restarts")


def gen_planar_subcubic(n: int, seed=None, keep: float = 0.8) -> Graph:
    """Random planar graph with max degree 3, sampled as a grid subgraph.

    Grows a connected cluster of ``n`` grid points, keeps each induced grid
    edge with probability ``keep``, trims degrees to at most 3 and relabels
    vertices randomly.
    """
    rng = np.random.default_rng(seed)
    cells = [(0, 0)]
    occupied = {(0, 0)}
    while len(cells) < n:
        x, y = cells[rng.integers(len(cells))]
        dx, dy = ((1, 0), (-1, 0), (0, 1), (0, -1))[rng.integers(4)]
        nxt = (x + dx, y + dy)
        if nxt not in occupied:
            occupied.add(nxt)
            cells.append(nxt)
    label = {c: int(i) for c, i in zip(cells, rng.permutation(n))}
    candidates = []
    for (x, y) in cells:
        for nb in ((x + 1, y), (x, y + 1)):
            if nb in occupied:
                candidates.append((label[(x, y)], label[nb]))
    deg = [0] * n
    edges = set()
    for u, v in candidates:
        if rng.random() < keep and deg[u] < 3 and deg[v] < 3:
            edges.add((min(u, v), max(u, v)))
            deg[u] += 1
            deg[v] += 1
    return Graph(n, frozenset(edges))


# --- exhaustive oracles -----------------------------------------------------


def _independent_mask(g: Graph, idx: np.ndarray) -> np.ndarray:
    ok = np.ones(idx.size, dtype=bool)
    for u, v in g.edge_list():
        ok &= (bit_column(idx, u) & bit_column(idx, v)) == 0
    return ok


def _subset(index: int, n: int) -> frozenset[int]:
    return frozenset(i for i in range(n) if (index >> i) & 1)


def brute_force_mis(g: Graph) -> tuple[int, list[frozenset[int]]]:
    """Independence number and every maximum independent set of ``g``."""
    _check_enumerable(g.n)
    idx = basis_indices(g.n)
    ok = _independent_mask(g, idx)
    sizes = np.where(ok, np.bitwise_count(idx).astype(np.int64), -1)
    best = int(sizes.max())
    sets = [_subset(int(b), g.n) for b in np.flatnonzero(sizes == best)]
    return best, sorted(sets, key=sorted)


def brute_force_max_clique(g: Graph) -> tuple[int, list[frozenset[int]]]:
    return brute_force_mis(complement(g))


def is_independent(g: Graph, subset: Iterable[int]) -> bool:
    s = set(subset)
    return not any(u in s and v in s for u, v in g.edges)


def sat_mask(f: CnfFormula, idx: np.ndarray) -> np.ndarray:
    ok = np.ones(idx.size, dtype=bool)
    for clause in f.clauses:
        sat = np.zeros(idx.size, dtype=bool)
        for v, neg in clause:
            sat |= bit_column(idx, v) != int(neg)
        ok &= sat
    return ok


def count_sat(f: CnfFormula) -> int:
    _check_enumerable(f.n)
    return int(sat_mask(f, basis_indices(f.n)).sum())


def count_exact_cover(e: ExactCoverInstance) -> int:
    _check_enumerable(e.n)
    idx = basis_indices(e.n)
    ok = np.ones(idx.size, dtype=bool)
    for clause in e.clauses:
        ok &= _exact_cover_mask(idx, clause)
    return int(ok.sum())


def exact_cover_solutions(e: ExactCoverInstance) -> list[int]:
    _check_enumerable(e.n)
    idx = basis_indices(e.n)
    ok = np.ones(idx.size, dtype=bool)
    for clause in e.clauses:
        ok &= _exact_cover_mask(idx, clause)
    return [int(b) for b in np.flatnonzero(ok)]


def connected_graphs_upto(n_max: int) -> list[Graph]:
    """All connected graphs with 1..n_max vertices, one per isomorphism class (n_max <= 7)."""
    import networkx as nx

    if n_max > 7:
        raise ValueError("graph atlas only covers n <= 7")
    out = []
    for h in nx.graph_atlas_g():
        k = h.number_of_nodes()
        if 1 <= k <= n_max and nx.is_connected(h):
            out.append(Graph(k, frozenset(tuple(e) for e in h.edges())))
    return out


# --- text formats -----------------------------------------------------------


def _data_lines(text: str, comment: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith(comment)]


def format_graph(g: Graph, comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"{g.n} {g.m}")
    lines += [f"{u} {v}" for u, v in g.edge_list()]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> Graph:
    lines = _data_lines(text, "#")
    if not lines:
        raise ValueError("empty graph file")
    n, m = (int(x) for x in lines[0].split())
    body = lines[1:]
    if len(body) != m:
        raise ValueError(f"header declares {m} edges, found {len(body)}")
    edges = [tuple(int(x) for x in ln.split()) for ln in body]
    if any(len(e) != 2 for e in edges):
        raise ValueError("edge lines must hold exactly two vertices")
    return Graph.from_edges(n, edges)


def format_dimacs(f: CnfFormula, comments: Sequence[str] = ()) -> str:
    lines = [f"c {c}" for c in comments]
    lines.append(f"p cnf {f.n} {f.m}")
    for clause in f.clauses:
        lits = [-(v + 1) if neg else v + 1 for v, neg in clause]
        lines.append(" ".join(str(x) for x in lits) + " 0")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfFormula:
    n = m = None
    tokens: list[int] = []
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("c") or ln.startswith("%"):
            continue
        if ln.startswith("p"):
            _, fmt, n_s, m_s = ln.split()
            if fmt != "cnf":
                raise ValueError(f"unsupported DIMACS format {fmt!r}")
            n, m = int(n_s), int(m_s)
            continue
        tokens += [int(x) for x in ln.split()]
    if n is None:
        raise ValueError("missing DIMACS problem line")
    clauses, cur = [], []
    for t in tokens:
        if t == 0:
            clauses.append(tuple((abs(x) - 1, x < 0) for x in cur))
            cur = []
        else:
            cur.append(t)
    if cur:
        raise ValueError("unterminated clause")
    if len(clauses) != m:
        raise ValueError(f"header declares {m} clauses, found {len(clauses)}")
    return CnfFormula(n, tuple(clauses))


def format_exact_cover(e: ExactCoverInstance, comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"{e.n} {e.m}")
    lines += [" ".join(str(v) for v in c) for c in e.clauses]
    return "\n".join(lines) + "\n"


def parse_exact_cover(text: str) -> ExactCoverInstance:
    lines = _data_lines(text, "#")
    n, m = (int(x) for x in lines[0].split())
    clauses = [tuple(int(x) for x in ln.split()) for ln in lines[1:]]
    if len(clauses) != m:
        raise ValueError(f"header declares {m} clauses, found {len(clauses)}")
    return ExactCoverInstance(n, tuple(clauses))


def read_graph(path: str | Path) -> Graph:
    return parse_graph(Path(path).read_text())
