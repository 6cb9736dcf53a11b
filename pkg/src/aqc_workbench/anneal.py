"""Metropolis simulated annealing and the residual-energy scaling experiment."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np
import scipy.stats

from .hamiltonian import IsingModel, ising_to_diagonal

LADDERS = ("linear", "geometric")


@dataclass(frozen=True)
class AnnealSchedule:
    """``steps`` sweeps; sweep k (1-based) runs at temperature T_k with T_steps = 0."""

    steps: int
    t_high: float
    ladder: str = "linear"
    t_low: float = 1e-3

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not self.t_high > 0:
            raise ValueError("t_high must be positive")
        if self.ladder not in LADDERS:
            raise ValueError(f"unknown ladder {self.ladder!r}; choose from {LADDERS}")
        if self.ladder == "geometric" and not 0 < self.t_low < self.t_high:
            raise ValueError("geometric ladder needs 0 < t_low < t_high")

    @classmethod
    def for_model(cls, m: IsingModel, steps: int, ladder: str = "linear") -> "AnnealSchedule":
        scale = m.local_scale()
        return cls(steps, 2.0 * scale if scale > 0 else 1.0, ladder)

    def temperatures(self) -> np.ndarray:
        k = np.arange(1, self.steps + 1, dtype=float)
        if self.ladder == "linear":
            temps = self.t_high * (1.0 - k / self.steps)
        else:
            # geometric from t_high down to t_low, then a final T = 0 sweep
            frac = (k - 1) / max(self.steps - 1, 1)
            temps = self.t_high * (self.t_low / self.t_high) ** frac
        temps[-1] = 0.0
        return temps


@dataclass
class AnnealResult:
    final_spins: np.ndarray
    energy: float
    residual_energy: float
    trace: np.ndarray = field(default_factory=lambda: np.empty(0))


def _dense_couplings(m: IsingModel):
    # CSR-style neighbor lists for the kernel
    nbrs = [[] for _ in range(m.n)]
    for (i, j), v in sorted(m.J.items()):
        nbrs[i].append((j, v))
        nbrs[j].append((i, v))
    ptr = np.zeros(m.n + 1, dtype=np.int64)
    for i in range(m.n):
        ptr[i + 1] = ptr[i] + len(nbrs[i])
    idx = np.array([j for row in nbrs for j, _ in row], dtype=np.int64)
    val = np.array([v for row in nbrs for _, v in row], dtype=float)
    return ptr, idx, val


@numba.njit(cache=True)
def _metropolis(h, ptr, idx, val, spins, temps, sites, uniforms, energy, trace_every, trace):
    n = h.shape[0]
    p = 0
    for k in range(temps.shape[0]):
        t = temps[k]
        for _ in range(n):
            i = sites[p]
            u = uniforms[p]
            p += 1
            local = h[i]
            for q in range(ptr[i], ptr[i + 1]):
                local += val[q] * spins[idx[q]]
            de = -2.0 * spins[i] * local
            if de <= 0.0:
                accept = True
            elif t > 0.0:
                accept = u < math.exp(-de / t)
            else:
                accept = False
            if accept:
                spins[i] = -spins[i]
                energy += de
        if trace_every > 0 and (k + 1) % trace_every == 0:
            trace[(k + 1) // trace_every - 1] = energy
    return energy


def _energy(m: IsingModel, s: np.ndarray) -> float:
    e = float(np.dot(m.h, s))
    for (i, j), v in m.J.items():
        e += v * s[i] * s[j]
    return e


def metropolis_anneal(
    m: IsingModel,
    schedule: AnnealSchedule,
    seed=None,
    ground_energy: float | None = None,
    trace_points: int = 100,
) -> AnnealResult:
    """Single-spin-flip Metropolis cooling from a uniformly random configuration.

    Each sweep makes n proposals at uniformly random sites.  Random numbers
    are drawn up front from ``default_rng(seed)`` so runs are bit-reproducible.
    """
    rng = np.random.default_rng(seed)
    spins = rng.choice(np.array([-1.0, 1.0]), size=m.n)
    total = schedule.steps * m.n
    sites = rng.integers(0, m.n, size=total)
    uniforms = rng.random(total)
    every = max(1, schedule.steps // trace_points) if trace_points > 0 else 0
    trace = np.zeros(schedule.steps // every if every else 0)
    ptr, idx, val = _dense_couplings(m)
    energy = _metropolis(
        m.h, ptr, idx, val, spins, schedule.temperatures(), sites, uniforms,
        _energy(m, spins), every, trace,
    )
    energy = _energy(m, spins)  # recompute to avoid accumulated roundoff
    if ground_energy is None:
        ground_energy = ising_to_diagonal(m).ground_energy()
    return AnnealResult(spins.astype(np.int8), energy, max(energy - ground_energy, 0.0), trace)


def metropolis_chain(m: IsingModel, temperature: float, sweeps: int, seed=None, thin: int = 1) -> np.ndarray:
    """Visit counts per basis index of a fixed-temperature chain.

    One sample is recorded every ``thin`` proposals, so the total count is
    sweeps * n / thin.
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    if thin < 1:
        raise ValueError("thin must be at least 1")
    if m.n > 16:
        raise ValueError("visit counting is limited to n <= 16")
    rng = np.random.default_rng(seed)
    spins = rng.choice(np.array([-1.0, 1.0]), size=m.n)
    total = sweeps * m.n
    ptr, idx, val = _dense_couplings(m)
    return _chain_counts(m.h, ptr, idx, val, spins, temperature,
                         rng.integers(0, m.n, size=total), rng.random(total), thin)


@numba.njit(cache=True)
def _chain_counts(h, ptr, idx, val, spins, t, sites, uniforms, thin):
    n = h.shape[0]
    counts = np.zeros(1 << n, dtype=np.int64)
    for p in range(sites.shape[0]):
        i = sites[p]
        local = h[i]
        for q in range(ptr[i], ptr[i + 1]):
            local += val[q] * spins[idx[q]]
        de = -2.0 * spins[i] * local
        if de <= 0.0 or uniforms[p] < math.exp(-de / t):
            spins[i] = -spins[i]
        if (p + 1) % thin != 0:
            continue
        b = 0
        for j in range(n):
            if spins[j] < 0:
                b |= 1 << j
        counts[b] += 1
    return counts


def gibbs_distribution(m: IsingModel, temperature: float) -> np.ndarray:
    e = ising_to_diagonal(m).diagonal()
    w = np.exp(-(e - e.min()) / temperature)
    return w / w.sum()


# --- residual scaling -------------------------------------------------------


@dataclass
class ScalingFit:
    xi: float
    stderr: float
    ci: tuple[float, float]


@dataclass
class MethodSummary:
    method: str
    taus: list[float]
    mean: list[float]
    stderr: list[float]
    fit: ScalingFit | None
    fit_note: str = ""


@dataclass
class ScalingExperiment:
    summaries: dict[str, MethodSummary]
    records: list[dict]


def fit_log_residual(taus: Sequence[float], residuals: Sequence[float], confidence: float = 0.95):
    """Fit log(residual) = a - xi * log(ln tau); returns (fit, note).

    Only tau > e and positive mean residuals enter the fit.
    """
    pts = [(t, r) for t, r in zip(taus, residuals) if t > math.e and r > 0]
    if len(pts) < 3:
        return None, f"fit skipped: {len(pts)} usable points (need tau > e and residual > 0)"
    x = np.log(np.log([t for t, _ in pts]))
    y = np.log([r for _, r in pts])
    reg = scipy.stats.linregress(x, y)
    half = scipy.stats.t.ppf(0.5 + confidence / 2, len(pts) - 2) * reg.stderr
    xi = -float(reg.slope)
    return ScalingFit(xi, float(reg.stderr), (xi - half, xi + half)), ""


def residual_scaling_experiment(
    models: Sequence[IsingModel],
    tau_list: Sequence[float],
    seed: int = 0,
    quantum: bool = True,
    gamma0_rule: str = "polarization",
) -> ScalingExperiment:
    """Mean residual energy vs tau for Metropolis (tau in sweeps) and the adiabatic evolution (tau in time).

    ``models`` are the instances (one repetition each); every instance gets one
    classical run per tau, seeded from (seed, instance, tau index), and one
    deterministic quantum run per tau.
    """
    from .evolve import Schedule, gamma0_for, run_adiabatic

    taus = sorted(float(t) for t in tau_list)
    if len(taus) < 2 or taus[-1] / taus[0] < 100:
        raise ValueError("tau_list must span at least two decades")
    if any(m.n > 20 for m in models):
        raise ValueError("ground energies need n <= 20")
    methods = ["metropolis"] + (["quantum"] if quantum else [])
    values = {meth: np.zeros((len(models), len(taus))) for meth in methods}
    records = []
    for a, m in enumerate(models):
        hp = ising_to_diagonal(m)
        e0 = hp.ground_energy()
        gamma0 = gamma0_for(hp, gamma0_rule) if quantum else None
        for b, tau in enumerate(taus):
            t0 = time.perf_counter()
            steps = max(1, int(round(tau)))
            res = metropolis_anneal(m, AnnealSchedule.for_model(m, steps),
                                    np.random.SeedSequence([seed, a, b]), e0, trace_points=0)
            values["metropolis"][a, b] = res.residual_energy
            records.append({"method": "metropolis", "instance": a, "tau": tau, "seed": seed,
                            "residual": res.residual_energy, "wall_time": time.perf_counter() - t0})
            if quantum:
                t0 = time.perf_counter()
                q = run_adiabatic(hp, Schedule(tau, gamma0))
                values["quantum"][a, b] = q.residual_energy
                records.append({"method": "quantum", "instance": a, "tau": tau, "seed": seed,
                                "residual": q.residual_energy, "success": q.success_probability,
                                "gamma0": gamma0, "norm_drift": q.norm_drift,
                                "wall_time": time.perf_counter() - t0})
    summaries = {}
    for meth in methods:
        v = values[meth]
        mean = v.mean(axis=0)
        se = v.std(axis=0, ddof=1) / math.sqrt(len(models)) if len(models) > 1 else np.zeros(len(taus))
        fit, note = fit_log_residual(taus, mean)
        if np.all(v == 0):
            fit, note = None, "fit skipped: all residuals are zero"
        summaries[meth] = MethodSummary(meth, taus, [float(x) for x in mean], [float(x) for x in se], fit, note)
    return ScalingExperiment(summaries, records)


def non_increasing_within(mean: Sequence[float], stderr: Sequence[float], k: float = 2.0) -> bool:
    """True if each step up in tau never raises the mean by more than k combined standard errors."""
    for i in range(len(mean) - 1):
        if mean[i + 1] - mean[i] > k * math.hypot(stderr[i], stderr[i + 1]):
            return False
    return True
