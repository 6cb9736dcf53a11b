"""Robustness checks: Ohmic renormalization of the tunnel splitting, first-order
perturbation corrections against the lambda n^2 / Delta bound, and verifiers for
the MIS and scaled-coupling ground-state claims."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .graphs import Graph, brute_force_mis, spins_from_index
from .hamiltonian import (
    ENERGY_TOL,
    DiagonalHamiltonian,
    IsingModel,
    PerturbationSpec,
    apply_perturbation,
    build_mis_ising_corrected,
    build_mis_ising_unit,
    build_scaled_family,
    ising_to_diagonal,
)

CONVENTIONS = ("in_set_plus", "in_set_minus")
WEIGHT_RANGE = (0.1, 10.0)
VERIFIER_LIMIT = 16


# --- spin-boson splitting ---------------------------------------------------


@dataclass(frozen=True)
class SpinBosonParams:
    delta0: float
    omega_c: float
    alpha: float

    def __post_init__(self) -> None:
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if not self.omega_c > self.delta0:
            raise ValueError("omega_c must exceed delta0")
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")


@dataclass(frozen=True)
class TunnelSplitting:
    exact: float
    first_order: float


def effective_tunnel_splitting(p: SpinBosonParams) -> TunnelSplitting:
    """Delta = Delta0 (Delta0 / omega_c)^(alpha / (1 - alpha)) and its first-order expansion."""
    if p.alpha == 0:
        return TunnelSplitting(p.delta0, p.delta0)
    log_ratio = math.log(p.omega_c / p.delta0)
    exact = p.delta0 * math.exp(-p.alpha / (1.0 - p.alpha) * log_ratio)
    return TunnelSplitting(exact, p.delta0 * (1.0 - p.alpha * log_ratio))


def expansion_error_bound(p: SpinBosonParams) -> float:
    """2 alpha^2 ln^2(omega_c / Delta0), in units of Delta0."""
    return 2.0 * p.alpha ** 2 * math.log(p.omega_c / p.delta0) ** 2 * p.delta0


def remainder_constant(alphas, ratios) -> float:
    """max |exact - first order| / (Delta0 alpha^2) over a grid; the O(alpha^2) prefactor."""
    worst = 0.0
    for a in alphas:
        if a == 0:
            continue
        for r in ratios:
            s = effective_tunnel_splitting(SpinBosonParams(1.0, float(r), float(a)))
            worst = max(worst, abs(s.exact - s.first_order) / a ** 2)
    return worst


def dominance_check(p: SpinBosonParams, tolerance: float) -> bool:
    """True iff the renormalized splitting is within ``tolerance`` (relative) of Delta0."""
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    return abs(effective_tunnel_splitting(p).exact / p.delta0 - 1.0) <= tolerance


# --- perturbation theory ----------------------------------------------------


class DegenerateGroundError(ValueError):
    pass


def _as_diagonal(hp) -> DiagonalHamiltonian:
    return ising_to_diagonal(hp) if isinstance(hp, IsingModel) else hp


def perturbative_gap(hp, ground: int, tol: float = ENERGY_TOL) -> float:
    """Smallest non-degenerate energy increase from flipping one or two bits of ``ground``."""
    hp = _as_diagonal(hp)
    n = hp.n
    flips = [1 << i for i in range(n)] + [(1 << i) | (1 << j) for i in range(n) for j in range(i)]
    if not flips:
        raise DegenerateGroundError("no flips available for n = 0")
    e = hp.energies(np.array([ground] + [ground ^ f for f in flips], dtype=np.int64))
    diffs = e[1:] - e[0]
    diffs = diffs[np.abs(diffs) > tol]
    if diffs.size == 0:
        raise DegenerateGroundError("every 1- and 2-flip neighbor is degenerate with the ground state")
    return float(diffs.min())


@dataclass
class PerturbationReport:
    n: int
    lam: float
    delta_gap: float
    bound: float
    correction_norm: float
    within_bound: bool
    series_ratio_below_one: bool
    ground: int


def first_order_correction(hp, p: PerturbationSpec, tol: float = ENERGY_TOL) -> PerturbationReport:
    """First-order state correction sum_k <k|H'|g> / (E_g - E_k) |k> and its norm.

    H_p is diagonal, so basis states are its eigenstates.  Refuses degenerate grounds.
    """
    hp = _as_diagonal(hp)
    if hp.n > 14:
        raise ValueError("first_order_correction is limited to n <= 14")
    if p.n != hp.n:
        raise ValueError("perturbation and Hamiltonian sizes differ")
    d = hp.diagonal()
    ground_set = hp.ground_indices(tol)
    if ground_set.size != 1:
        raise DegenerateGroundError(f"ground space has dimension {ground_set.size}")
    g = int(ground_set[0])
    delta = perturbative_gap(hp, g, tol)
    if delta <= tol:
        raise DegenerateGroundError(f"gap {delta} below tolerance")
    psi = np.zeros(hp.dim, dtype=complex)
    psi[g] = 1.0
    amp = apply_perturbation(p, psi)
    denom = d[g] - d
    denom[g] = 1.0
    coeff = amp / denom
    coeff[g] = 0.0
    norm = float(np.linalg.norm(coeff))
    bound = p.lam * hp.n ** 2 / delta
    return PerturbationReport(hp.n, p.lam, delta, bound, norm, norm <= bound, bound < 1.0, g)


# --- ground-state claim verifiers -------------------------------------------


def spins_tuple(index: int, n: int) -> tuple[int, ...]:
    return tuple(int(x) for x in spins_from_index(index, n))


def encode_set(subset, n: int, convention: str) -> tuple[int, ...]:
    inside = 1 if convention == "in_set_plus" else -1
    return tuple(inside if i in subset else -inside for i in range(n))


def decode_config(spins, convention: str) -> frozenset[int]:
    inside = 1 if convention == "in_set_plus" else -1
    return frozenset(i for i, s in enumerate(spins) if s == inside)


def ground_configs(m: IsingModel, tol: float = ENERGY_TOL) -> tuple[float, list[tuple[int, ...]]]:
    hp = ising_to_diagonal(m, VERIFIER_LIMIT)
    return hp.ground_energy(), sorted(spins_tuple(int(b), m.n) for b in hp.ground_indices(tol))


def _relation(ground: set, target: set) -> str:
    if ground == target:
        return "equal"
    if target < ground:
        return "contains"
    if ground < target:
        return "contained"
    return "fail"


def _graph_payload(g: Graph) -> dict:
    return {"n": g.n, "edges": [list(e) for e in g.edge_list()]}


def mis_correspondence_verifier(g: Graph, model: str = "unit") -> dict:
    """Compare the MIS Ising ground set with oracle MIS encodings under both decode conventions.

    ``model`` selects the unit-field model ("unit") or the corrected penalty
    model ("corrected").  Relations: equal, contains (ground set strictly
    larger), contained (strictly smaller) or fail.
    """
    if g.n > VERIFIER_LIMIT:
        raise ValueError(f"verifier limited to n <= {VERIFIER_LIMIT}")
    m = build_mis_ising_unit(g) if model == "unit" else build_mis_ising_corrected(g)
    e0, ground = ground_configs(m)
    size, sets = brute_force_mis(g)
    conventions = {}
    for c in CONVENTIONS:
        encodings = {encode_set(s, g.n, c) for s in sets}
        conventions[c] = {
            "relation": _relation(set(ground), encodings),
            "decoded": sorted(sorted(decode_config(s, c)) for s in ground),
        }
    return {
        "check": "mis_correspondence",
        "model": model,
        "graph": _graph_payload(g),
        "ground_energy": e0,
        "ground_set": [list(s) for s in ground],
        "mis_size": size,
        "mis_sets": [sorted(s) for s in sets],
        "conventions": conventions,
    }


def scaled_family_check(g: Graph, weights) -> dict:
    """One draw: does every ground state of the scaled family lie in the unit model's ground set
    and decode to a maximum independent set?"""
    weights = [float(w) for w in weights]
    _, fam = ground_configs(build_scaled_family(g, weights))
    _, base = ground_configs(build_mis_ising_unit(g))
    _, sets = brute_force_mis(g)
    base_set = set(base)
    mis = set(sets)
    outside = [list(s) for s in fam if s not in base_set]
    decode = {c: [list(s) for s in fam if decode_config(s, c) not in mis] for c in CONVENTIONS}
    return {
        "graph": _graph_payload(g),
        "weights": weights,
        "family_ground_set": [list(s) for s in fam],
        "in_unit_ground_set": not outside,
        "violating_configs": outside,
        "decodes_to_mis": {c: not v for c, v in decode.items()},
        "decode_violations": decode,
    }


def log_uniform_weights(rng: np.random.Generator, n: int, low: float = WEIGHT_RANGE[0],
                        high: float = WEIGHT_RANGE[1]) -> list[float]:
    return [float(x) for x in np.exp(rng.uniform(math.log(low), math.log(high), size=n))]


def scaled_family_claim_verifier(g: Graph, trials: int, seed=None, extra_weights=()) -> dict:
    """Random log-uniform positive weights (plus any ``extra_weights``) through scaled_family_check."""
    if g.n > VERIFIER_LIMIT:
        raise ValueError(f"verifier limited to n <= {VERIFIER_LIMIT}")
    rng = np.random.default_rng(seed)
    draws = [list(w) for w in extra_weights] + [log_uniform_weights(rng, g.n) for _ in range(trials)]
    confirmed = 0
    decode_confirmed = dict.fromkeys(CONVENTIONS, 0)
    counterexamples = []
    for w in draws:
        r = scaled_family_check(g, w)
        if r["in_unit_ground_set"]:
            confirmed += 1
        else:
            counterexamples.append(r)
        for c in CONVENTIONS:
            decode_confirmed[c] += r["decodes_to_mis"][c]
    return {
        "check": "scaled_family",
        "graph": _graph_payload(g),
        "trials": len(draws),
        "seed": seed,
        "confirmed": confirmed,
        "decode_confirmed": decode_confirmed,
        "counterexamples": counterexamples,
    }


def perturbation_bound_suite(count: int, seed=None, n_range=(2, 10), lam_max: float = 0.1,
                             edge_prob: float = 0.5) -> list[PerturbationReport]:
    """Random Ising instances with a unique ground state paired with random perturbations."""
    from .graphs import gen_random_graph
    from .hamiltonian import random_perturbation

    rng = np.random.default_rng(seed)
    reports = []
    while len(reports) < count:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        g = gen_random_graph(n, edge_prob, rng)
        m = IsingModel(n, rng.uniform(-1, 1, n), {e: float(rng.uniform(-1, 1)) for e in g.edge_list()})
        hp = ising_to_diagonal(m)
        if hp.ground_indices().size != 1:
            continue
        p = random_perturbation(n, float(rng.uniform(0, lam_max)), rng)
        reports.append(first_order_correction(hp, p))
    return reports


def reference_findings() -> dict:
    """The small-graph cases that pin down both claims: P3, the triangle and K2."""
    p3, tri, k2 = Graph.path(3), Graph.complete(3), Graph.complete(2)
    return {
        "mis": {name: mis_correspondence_verifier(g) for name, g in (("P3", p3), ("triangle", tri), ("K2", k2))},
        "scaled_family": {
            "K2_unit": scaled_family_check(k2, [1.0, 1.0]),
            "P3_unit": scaled_family_check(p3, [1.0, 1.0, 1.0]),
            "K2_half": scaled_family_check(k2, [0.5, 0.5]),
            "P3_0.1_1_0.1": scaled_family_check(p3, [0.1, 1.0, 0.1]),
        },
    }


def pauli_terms_single_target(n: int) -> bool:
    """Every single and pair Pauli term maps each basis vector to exactly one basis vector."""
    from .hamiltonian import PAULI_AXES, apply_pauli_term

    terms = [[(i, k)] for i in range(n) for k in PAULI_AXES]
    terms += [[(i, k), (j, l)] for i in range(n) for j in range(i) for k in PAULI_AXES for l in PAULI_AXES]
    for b in range(1 << n):
        e = np.zeros(1 << n, dtype=complex)
        e[b] = 1.0
        for ops in terms:
            if np.count_nonzero(np.abs(apply_pauli_term(ops, e, n)) > 1e-15) != 1:
                return False
    return True


def expansion_grid_check(alphas=None, ratios=None) -> dict:
    """|exact - first order| <= 2 alpha^2 ln^2(omega_c / Delta0) on a grid of alpha <= 0.05."""
    alphas = np.linspace(0.0, 0.05, 11) if alphas is None else np.asarray(alphas)
    ratios = np.logspace(1, 4, 13) if ratios is None else np.asarray(ratios)
    worst, points, ok = 0.0, 0, True
    for a in alphas:
        for r in ratios:
            p = SpinBosonParams(1.0, float(r), float(a))
            s = effective_tunnel_splitting(p)
            err = abs(s.exact - s.first_order)
            bound = expansion_error_bound(p)
            ok &= err <= bound
            if bound > 0:
                worst = max(worst, err / bound)
            points += 1
    zero = effective_tunnel_splitting(SpinBosonParams(1.0, 100.0, 0.0)).exact == 1.0
    return {"points": points, "all_within": bool(ok and zero), "max_error_over_bound": worst,
            "alpha_zero_exact": zero}


def report_json(obj) -> str:
    def default(o):
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if hasattr(o, "__dataclass_fields__"):
            return asdict(o)
        raise TypeError(f"not serializable: {type(o)}")

    return json.dumps(obj, default=default, sort_keys=True)
