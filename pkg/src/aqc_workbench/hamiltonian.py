"""Problem Hamiltonians and the matrix-free action of H_p + Gamma * sum_i X_i."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np

from .graphs import (
    ENUMERATION_LIMIT,
    CnfFormula,
    ExactCoverInstance,
    Graph,
    _check_enumerable,
    basis_indices,
    bit_column,
    index_from_spins,
)

ENERGY_TOL = 1e-9
PAULI_AXES = ("x", "y", "z")


@dataclass
class IsingModel:
    """E(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j."""

    n: int
    h: np.ndarray
    J: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=float).reshape(-1)
        if self.h.size != self.n:
            raise ValueError(f"expected {self.n} fields, got {self.h.size}")
        couplings = {}
        for (i, j), val in self.J.items():
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"diagonal coupling ({i}, {i})")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"coupling ({i}, {j}) out of range")
            key = (min(i, j), max(i, j))
            if key in couplings:
                raise ValueError(f"coupling {key} given twice")
            couplings[key] = float(val)
        self.J = couplings

    def energies(self, indices: np.ndarray) -> np.ndarray:
        """Vectorized energy of basis indices."""
        spins = [1 - 2 * bit_column(indices, i) for i in range(self.n)]
        e = np.zeros(indices.shape, dtype=float)
        for i in range(self.n):
            if self.h[i] != 0.0:
                e += self.h[i] * spins[i]
        for (i, j), val in self.J.items():
            e += val * (spins[i] * spins[j])
        return e

    def local_scale(self) -> float:
        """Largest |h_i| + sum_j |J_ij|; the biggest single-flip energy is twice this."""
        scale = np.abs(self.h).copy()
        for (i, j), val in self.J.items():
            scale[i] += abs(val)
            scale[j] += abs(val)
        return float(scale.max(initial=0.0))

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "h": [float(x) for x in self.h],
                "J": [[i, j, v] for (i, j), v in sorted(self.J.items())],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "IsingModel":
        d = json.loads(text)
        return cls(int(d["n"]), d["h"], {(int(i), int(j)): float(v) for i, j, v in d["J"]})


def ising_energy(m: IsingModel, s) -> float:
    s = np.asarray(s)
    if s.shape != (m.n,):
        raise ValueError(f"config of shape {s.shape} does not match n={m.n}")
    e = float(np.dot(m.h, s))
    for (i, j), val in m.J.items():
        e += val * s[i] * s[j]
    return e


def build_mis_ising_unit(g: Graph) -> IsingModel:
    """Unit field on every spin and unit antiferromagnetic coupling on every edge."""
    return IsingModel(g.n, np.ones(g.n), {e: 1.0 for e in g.edge_list()})


def build_mis_ising_corrected(g: Graph, penalty: float = 2.0) -> IsingModel:
    """Degree-compensated MIS encoding with s_i = +1 meaning "i in the set".

    Spin form of ``-sum_i x_i + M sum_edges x_i x_j`` with x_i = (1 + s_i)/2,
    constant dropped.
    """
    if penalty <= 1:
        raise ValueError(f"penalty must exceed 1, got {penalty}")
    deg = np.asarray(g.degrees(), dtype=float)
    h = -0.5 + penalty * deg / 4.0
    return IsingModel(g.n, h, {e: penalty / 4.0 for e in g.edge_list()})


def build_scaled_family(g: Graph, weights) -> IsingModel:
    w = np.asarray(weights, dtype=float)
    if w.shape != (g.n,):
        raise ValueError(f"need {g.n} weights, got shape {w.shape}")
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    return IsingModel(g.n, w.copy(), {(u, v): w[u] * w[v] for u, v in g.edge_list()})


def truncated_normal(rng: np.random.Generator, size: int, sigma: float = 1.0, bound: float = 1.0) -> np.ndarray:
    out = np.empty(size)
    filled = 0
    while filled < size:
        draw = rng.normal(0.0, sigma, size=max(2 * (size - filled), 8))
        draw = draw[np.abs(draw) <= bound]
        take = min(draw.size, size - filled)
        out[filled:filled + take] = draw[:take]
        filled += take
    return out


def build_random_field_ising(n: int, edges, seed=None, sigma: float = 1.0) -> IsingModel:
    """Zero-field Ising model with couplings ~ N(0, sigma^2) rejected outside [-1, 1]."""
    edges = sorted({(min(u, v), max(u, v)) for u, v in edges})
    rng = np.random.default_rng(seed)
    values = truncated_normal(rng, len(edges), sigma)
    return IsingModel(n, np.zeros(n), dict(zip(edges, values)))


class DiagonalHamiltonian:
    """Hamiltonian diagonal in the computational basis.

    ``energy_fn`` maps an int64 array of basis indices to energies.  The full
    2**n diagonal is materialized lazily and only for n <= ENUMERATION_LIMIT.
    """

    def __init__(self, n: int, energy_fn: Callable[[np.ndarray], np.ndarray], label: str = ""):
        self.n = n
        self.label = label
        self._energy_fn = energy_fn
        self._diag: np.ndarray | None = None

    @classmethod
    def from_diagonal(cls, values, label: str = "") -> "DiagonalHamiltonian":
        values = np.asarray(values, dtype=float)
        n = int(round(np.log2(values.size)))
        if 1 << n != values.size:
            raise ValueError("diagonal length must be a power of two")
        hp = cls(n, lambda idx: values[idx], label)
        hp._diag = values
        return hp

    def __reduce__(self):
        # energy functions are closures; ship the materialized diagonal instead
        return (DiagonalHamiltonian.from_diagonal, (self.diagonal(), self.label))

    def energies(self, indices) -> np.ndarray:
        return np.asarray(self._energy_fn(np.asarray(indices, dtype=np.int64)), dtype=float)

    def energy(self, config) -> float:
        """Energy of one basis state given as an index or a +1/-1 spin vector."""
        if np.ndim(config) == 0:
            index = int(config)
        else:
            if len(config) != self.n:
                raise ValueError(f"config length {len(config)} != n={self.n}")
            index = index_from_spins(config)
        return float(self.energies(np.array([index]))[0])

    def diagonal(self) -> np.ndarray:
        if self._diag is None:
            _check_enumerable(self.n)
            self._diag = self.energies(basis_indices(self.n))
        return self._diag

    @property
    def dim(self) -> int:
        return 1 << self.n

    def ground_energy(self) -> float:
        return float(self.diagonal().min())

    def ground_indices(self, tol: float = ENERGY_TOL) -> np.ndarray:
        d = self.diagonal()
        return np.flatnonzero(d <= d.min() + tol)

    def max_abs_energy(self) -> float:
        return float(np.abs(self.diagonal()).max())


def build_3sat_hamiltonian(f: CnfFormula) -> DiagonalHamiltonian:
    """Energy = number of violated clauses."""

    def energy(idx: np.ndarray) -> np.ndarray:
        e = np.zeros(idx.shape, dtype=float)
        for clause in f.clauses:
            violated = np.ones(idx.shape, dtype=bool)
            for v, neg in clause:
                violated &= bit_column(idx, v) == int(neg)
            e += violated
        return e

    return DiagonalHamiltonian(f.n, energy, "3sat")


def build_exact_cover_hamiltonian(e: ExactCoverInstance, indicator: bool = False) -> DiagonalHamiltonian:
    """Energy = sum over clauses of (x_a + x_b + x_c - 1)**2, or the count of violated clauses."""

    def energy(idx: np.ndarray) -> np.ndarray:
        out = np.zeros(idx.shape, dtype=float)
        for a, b, c in e.clauses:
            k = bit_column(idx, a) + bit_column(idx, b) + bit_column(idx, c)
            out += (k != 1) if indicator else (k - 1) ** 2
        return out

    return DiagonalHamiltonian(e.n, energy, "exact_cover")


def ising_to_diagonal(m: IsingModel, limit: int = ENUMERATION_LIMIT) -> DiagonalHamiltonian:
    _check_enumerable(m.n, limit)
    return DiagonalHamiltonian(m.n, m.energies, "ising")


def ground_states(m: IsingModel, tol: float = ENERGY_TOL) -> tuple[float, list[int]]:
    """Brute-force ground energy and ground basis indices of an Ising model."""
    hp = ising_to_diagonal(m)
    return hp.ground_energy(), [int(b) for b in hp.ground_indices(tol)]


# --- matrix-free operators --------------------------------------------------


@numba.njit(cache=True)
def _transverse_apply(diag, gamma, psi, out):
    dim = psi.shape[0]
    n = 0
    while (1 << n) < dim:
        n += 1
    for b in range(dim):
        acc = diag[b] * psi[b]
        s = 0.0j
        for i in range(n):
            s += psi[b ^ (1 << i)]
        out[b] = acc + gamma * s
    return out


def _as_state(psi, n: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (1 << n,):
        raise ValueError(f"state of shape {psi.shape} does not match n={n}")
    return psi


def apply_hamiltonian(hp: DiagonalHamiltonian, gamma: float, psi, out: np.ndarray | None = None) -> np.ndarray:
    """(H_p + gamma * sum_i X_i) psi in O(n 2**n) without forming a matrix."""
    psi = _as_state(psi, hp.n)
    if out is None:
        out = np.empty_like(psi)
    return _transverse_apply(hp.diagonal(), float(gamma), psi, out)


def transverse_field_dense(n: int) -> np.ndarray:
    """Dense sum_i X_i; used for small-n eigensolves and as a test oracle."""
    dim = 1 << n
    mat = np.zeros((dim, dim))
    idx = np.arange(dim)
    for i in range(n):
        mat[idx, idx ^ (1 << i)] = 1.0
    return mat


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("zero vector cannot be normalized")
    return psi / norm


def check_state(psi, n: int, tol: float = 1e-9) -> np.ndarray:
    psi = _as_state(psi, n)
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise ValueError("state is not normalized")
    return psi


@dataclass
class PerturbationSpec:
    """sum eps[(i, k)] sigma_k^(i) + sum delta[(i, j, k, l)] sigma_k^(i) sigma_l^(j), i > j."""

    n: int
    single: dict = field(default_factory=dict)
    pair: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (i, k), val in self.single.items():
            self._check(i, k, val)
        for (i, j, k, l), val in self.pair.items():
            if not i > j:
                raise ValueError(f"pair term ({i}, {j}) requires i > j")
            self._check(i, k, val)
            self._check(j, l, val)

    def _check(self, i: int, k: str, val: float) -> None:
        if not 0 <= i < self.n:
            raise ValueError(f"qubit {i} out of range for n={self.n}")
        if k not in PAULI_AXES:
            raise ValueError(f"unknown Pauli axis {k!r}")
        if not np.isfinite(val):
            raise ValueError("perturbation coefficients must be finite")

    @property
    def lam(self) -> float:
        """Largest coefficient magnitude."""
        vals = [abs(v) for v in self.single.values()] + [abs(v) for v in self.pair.values()]
        return max(vals, default=0.0)

    def terms(self):
        """Yield (coefficient, [(qubit, axis), ...]) for every term."""
        for (i, k), val in sorted(self.single.items()):
            yield val, [(i, k)]
        for (i, j, k, l), val in sorted(self.pair.items()):
            yield val, [(i, k), (j, l)]


def random_perturbation(n: int, lam: float, seed=None, density: float = 1.0) -> PerturbationSpec:
    """Coefficients uniform in [-lam, lam]; each term kept with probability ``density``."""
    rng = np.random.default_rng(seed)
    single = {}
    for i in range(n):
        for k in PAULI_AXES:
            if rng.random() < density:
                single[(i, k)] = float(rng.uniform(-lam, lam))
    pair = {}
    for i in range(n):
        for j in range(i):
            for k in PAULI_AXES:
                for l in PAULI_AXES:
                    if rng.random() < density:
                        pair[(i, j, k, l)] = float(rng.uniform(-lam, lam))
    return PerturbationSpec(n, single, pair)


def apply_pauli(psi: np.ndarray, n: int, qubit: int, axis: str) -> np.ndarray:
    """sigma_axis on one qubit; |0> is the +1 eigenstate of sigma_z."""
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for n={n}")
    t = psi.reshape(1 << (n - 1 - qubit), 2, 1 << qubit)
    out = np.empty_like(t)
    if axis == "x":
        out[:, 0, :] = t[:, 1, :]
        out[:, 1, :] = t[:, 0, :]
    elif axis == "y":
        out[:, 0, :] = -1j * t[:, 1, :]
        out[:, 1, :] = 1j * t[:, 0, :]
    elif axis == "z":
        out[:, 0, :] = t[:, 0, :]
        out[:, 1, :] = -t[:, 1, :]
    else:
        raise ValueError(f"unknown Pauli axis {axis!r}")
    return out.reshape(-1)


def apply_pauli_term(ops, psi: np.ndarray, n: int) -> np.ndarray:
    out = psi
    for qubit, axis in ops:
        out = apply_pauli(out, n, qubit, axis)
    return out


def apply_perturbation(p: PerturbationSpec, psi) -> np.ndarray:
    psi = _as_state(psi, p.n)
    out = np.zeros_like(psi)
    for coeff, ops in p.terms():
        out += coeff * apply_pauli_term(ops, psi, p.n)
    return out
