"""Exact state-vector simulation of H(t) = H_p + Gamma(t) sum_i X_i.

Also holds spectra and minimum-gap scans, the Grover projector
interpolation, and the Landau-Zener estimate with its two-level oracle.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse.linalg
import scipy.stats

from .hamiltonian import (
    ENERGY_TOL,
    DiagonalHamiltonian,
    _transverse_apply,
    apply_hamiltonian,
    transverse_field_dense,
)

DENSE_LIMIT = 10
STATE_LIMIT = 24
NORM_DRIFT_LIMIT = 1e-6
PROFILES = ("linear", "quadratic")


class IntegrationError(RuntimeError):
    pass


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Transverse field ramp Gamma(t) from gamma0 at t=0 to 0 at t=tau."""

    tau: float
    gamma0: float
    profile: str = "linear"

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; choose from {PROFILES}")

    def gamma(self, t):
        x = 1.0 - np.clip(np.asarray(t, dtype=float) / self.tau, 0.0, 1.0)
        if self.profile == "quadratic":
            x = x * x
        return self.gamma0 * x


@dataclass
class SpectrumSample:
    gamma: float
    energies: np.ndarray
    vectors: np.ndarray | None = None
    residuals: np.ndarray | None = None


@dataclass
class EvolutionResult:
    final_state: np.ndarray
    success_probability: float
    residual_energy: float
    norm_drift: float
    steps: int
    dt: float
    gamma0: float
    min_gap: tuple[float, float] | None = None


# --- spectra ----------------------------------------------------------------


def _dense_matrix(hp: DiagonalHamiltonian, gamma: float) -> np.ndarray:
    return np.diag(hp.diagonal()) + gamma * transverse_field_dense(hp.n)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-12 * np.abs(v).max()))
    return v * (abs(v[k]) / v[k])


def instantaneous_spectrum(
    hp: DiagonalHamiltonian,
    gamma: float,
    k: int = 2,
    method: str = "auto",
    vectors: bool = False,
    tol: float = 1e-8,
) -> SpectrumSample:
    """Lowest ``k`` eigenpairs of H_p + gamma * sum X.

    ``method`` is "dense", "lanczos" (matrix-free, via apply_hamiltonian) or
    "auto" (dense for n <= 10).  Every returned pair has residual below ``tol``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if hp.n > STATE_LIMIT:
        raise ValueError(f"n={hp.n} exceeds the state-vector guard {STATE_LIMIT}")
    dim = hp.dim
    k = min(k, dim)
    if gamma == 0.0:
        d = hp.diagonal()
        order = np.argsort(d, kind="stable")[:k]
        vecs = np.zeros((dim, k), dtype=complex)
        vecs[order, np.arange(k)] = 1.0
        return SpectrumSample(0.0, d[order].copy(), vecs if vectors else None, np.zeros(k))

    if method == "auto":
        method = "dense" if hp.n <= DENSE_LIMIT or k >= dim - 1 else "lanczos"
    if method == "dense":
        if hp.n > 14:
            raise ValueError("dense diagonalization is limited to n <= 14")
        w, v = scipy.linalg.eigh(_dense_matrix(hp, gamma), subset_by_index=[0, k - 1])
        v = v.astype(complex)
    elif method == "lanczos":
        if k >= dim - 1:
            raise ValueError("Lanczos needs k < dim - 1; use the dense method")
        op = scipy.sparse.linalg.LinearOperator(
            (dim, dim), matvec=lambda x: apply_hamiltonian(hp, gamma, x), dtype=complex
        )
        v0 = np.full(dim, 1.0, dtype=complex) + 1e-3 * np.cos(np.arange(dim))
        try:
            w, v = scipy.sparse.linalg.eigsh(op, k=k, which="SA", v0=v0, tol=1e-13, maxiter=20 * dim)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise SpectrumError(f"Lanczos did not converge at gamma={gamma}: {exc}") from exc
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")

    residuals = np.array(
        [np.linalg.norm(apply_hamiltonian(hp, gamma, v[:, j]) - w[j] * v[:, j]) for j in range(k)]
    )
    if np.any(residuals > tol):
        raise SpectrumError(
            f"eigenpair residuals {residuals.max():.2e} exceed {tol:.0e} at gamma={gamma} ({method})"
        )
    if vectors:
        v = np.column_stack([_fix_phase(v[:, j]) for j in range(k)])
    return SpectrumSample(float(gamma), np.asarray(w, dtype=float), v if vectors else None, residuals)


def spectral_gap(hp: DiagonalHamiltonian, gamma: float, method: str = "auto") -> float:
    e = instantaneous_spectrum(hp, gamma, 2, method).energies
    return float(e[1] - e[0])


def initial_ground_state(hp: DiagonalHamiltonian, gamma0: float, method: str = "auto") -> np.ndarray:
    """Exact ground state of H_p + gamma0 * sum X, phase fixed so amplitude 0 is positive."""
    if not gamma0 > 0:
        raise ValueError("gamma0 must be positive")
    sample = instantaneous_spectrum(hp, gamma0, min(2, hp.dim), method, vectors=True)
    if sample.energies.size > 1 and sample.energies[1] - sample.energies[0] < ENERGY_TOL:
        raise SpectrumError("ground state of the initial Hamiltonian is degenerate")
    psi = sample.vectors[:, 0]
    psi = psi * (abs(psi[0]) / psi[0]) if abs(psi[0]) > 1e-300 else psi
    return psi / np.linalg.norm(psi)


def transverse_polarization(hp: DiagonalHamiltonian, gamma: float) -> float:
    """-<X>/n in the ground state of H_p + gamma * sum X (1 = fully polarized along -x)."""
    psi = initial_ground_state(hp, gamma)
    zero = np.zeros(hp.dim)
    x_psi = _transverse_apply(zero, 1.0, psi, np.empty_like(psi))
    return float(-np.vdot(psi, x_psi).real / hp.n)


def default_gamma0(hp: DiagonalHamiltonian, polarization: float = 0.9, rel_tol: float = 1e-3) -> float:
    """Smallest field whose ground state is ``polarization``-polarized along -x.

    Polarization is non-decreasing in the field, so a bisection in log-space
    suffices.  Returns 1.0 for a constant H_p.
    """
    d = hp.diagonal()
    width = float(d.max() - d.min())
    if width == 0.0:
        return 1.0
    lo = hi = width / (2 * hp.n)
    while transverse_polarization(hp, hi) < polarization:
        lo, hi = hi, 2 * hi
    while transverse_polarization(hp, lo) >= polarization:
        lo, hi = lo / 2, lo
    while hi / lo > 1 + rel_tol:
        mid = math.sqrt(lo * hi)
        if transverse_polarization(hp, mid) >= polarization:
            hi = mid
        else:
            lo = mid
    return hi


def large_field_gamma0(hp: DiagonalHamiltonian) -> float:
    """The conservative choice max(10 * max|E|, 10 n); far slower to anneal from."""
    return max(10.0 * hp.max_abs_energy(), 10.0 * hp.n)


GAMMA0_RULES = {"polarization": default_gamma0, "large": large_field_gamma0}


def gamma0_for(hp: DiagonalHamiltonian, rule: str = "polarization") -> float:
    try:
        return GAMMA0_RULES[rule](hp)
    except KeyError:
        raise ValueError(f"unknown gamma0 rule {rule!r}; choose from {sorted(GAMMA0_RULES)}") from None


def default_dt(gamma0: float, hp: DiagonalHamiltonian) -> float:
    return min(0.02, 0.1 / (gamma0 + hp.max_abs_energy()))


# --- time evolution ---------------------------------------------------------


@numba.njit(cache=True)
def _gamma_at(t, tau, gamma0, quadratic):
    x = 1.0 - t / tau
    if x < 0.0:
        x = 0.0
    if quadratic:
        x = x * x
    return gamma0 * x


@numba.njit(cache=True)
def _rk4_evolve(diag, psi, tau, gamma0, quadratic, steps):
    # RK4 on i dpsi/dt = (H(t) - c) psi where c = <psi|H|psi> at the start of
    # each step; the shift only changes the global phase.
    dim = psi.shape[0]
    dt = tau / steps
    k1 = np.empty_like(psi)
    k2 = np.empty_like(psi)
    k3 = np.empty_like(psi)
    k4 = np.empty_like(psi)
    tmp = np.empty_like(psi)
    drift = 0.0
    for s in range(steps):
        t = s * dt
        g0 = _gamma_at(t, tau, gamma0, quadratic)
        gm = _gamma_at(t + 0.5 * dt, tau, gamma0, quadratic)
        g1 = _gamma_at(t + dt, tau, gamma0, quadratic)
        _transverse_apply(diag, g0, psi, k1)
        c = 0.0
        for b in range(dim):
            c += (psi[b].conjugate() * k1[b]).real
        for b in range(dim):
            k1[b] = -1j * (k1[b] - c * psi[b])
            tmp[b] = psi[b] + 0.5 * dt * k1[b]
        _transverse_apply(diag, gm, tmp, k2)
        for b in range(dim):
            k2[b] = -1j * (k2[b] - c * tmp[b])
            tmp[b] = psi[b] + 0.5 * dt * k2[b]
        _transverse_apply(diag, gm, tmp, k3)
        for b in range(dim):
            k3[b] = -1j * (k3[b] - c * tmp[b])
            tmp[b] = psi[b] + dt * k3[b]
        _transverse_apply(diag, g1, tmp, k4)
        norm2 = 0.0
        for b in range(dim):
            k4[b] = -1j * (k4[b] - c * tmp[b])
            psi[b] = psi[b] + (dt / 6.0) * (k1[b] + 2.0 * k2[b] + 2.0 * k3[b] + k4[b])
            norm2 += psi[b].real * psi[b].real + psi[b].imag * psi[b].imag
        norm = math.sqrt(norm2)
        if abs(norm - 1.0) > drift:
            drift = abs(norm - 1.0)
        if drift > 1e-6:
            return psi, drift, s + 1
        for b in range(dim):
            psi[b] = psi[b] / norm
    return psi, drift, steps


def success_probability(psi, hp: DiagonalHamiltonian, tol: float = ENERGY_TOL) -> float:
    """Weight of psi on the (possibly degenerate) ground space of H_p."""
    psi = np.asarray(psi)
    p = float(np.sum(np.abs(psi[hp.ground_indices(tol)]) ** 2))
    return min(max(p, 0.0), 1.0)


def residual_energy(psi, hp: DiagonalHamiltonian) -> float:
    psi = np.asarray(psi)
    d = hp.diagonal()
    probs = np.abs(psi) ** 2
    return float(np.dot(probs, d) / probs.sum() - d.min())


def run_adiabatic(
    hp: DiagonalHamiltonian,
    schedule: Schedule,
    dt: float | None = None,
    scan_gap: bool = False,
) -> EvolutionResult:
    """Integrate from the exact ground state of H(0) to t = tau with fixed-step RK4.

    The state is renormalized each step; the largest pre-renormalization
    deviation is reported as ``norm_drift`` and a drift above 1e-6 aborts.
    The returned state is exact up to a global phase.
    """
    if hp.n > STATE_LIMIT:
        raise ValueError(f"n={hp.n} exceeds the state-vector guard {STATE_LIMIT}")
    if dt is None:
        dt = default_dt(schedule.gamma0, hp)
    if not dt > 0:
        raise ValueError("dt must be positive")
    steps = max(1, int(math.ceil(schedule.tau / dt - 1e-9)))
    psi0 = initial_ground_state(hp, schedule.gamma0)
    psi, drift, done = _rk4_evolve(
        hp.diagonal(), psi0.copy(), float(schedule.tau), float(schedule.gamma0),
        schedule.profile == "quadratic", steps,
    )
    if drift > NORM_DRIFT_LIMIT:
        raise IntegrationError(
            f"norm drift {drift:.2e} at step {done}/{steps} (dt={schedule.tau / steps:.3e}); reduce dt"
        )
    gap = None
    if scan_gap:
        scan = min_gap_scan(hp, schedule)
        gap = (scan.gap, scan.gamma)
    return EvolutionResult(
        final_state=psi,
        success_probability=success_probability(psi, hp),
        residual_energy=residual_energy(psi, hp),
        norm_drift=float(drift),
        steps=steps,
        dt=schedule.tau / steps,
        gamma0=schedule.gamma0,
        min_gap=gap,
    )


def sudden_success(hp: DiagonalHamiltonian, gamma0: float) -> float:
    """Ground-space weight of the initial state: the tau -> 0 limit of the success probability."""
    return success_probability(initial_ground_state(hp, gamma0), hp)


# --- gap scans --------------------------------------------------------------


@dataclass
class GapScan:
    gap: float
    gamma: float
    samples: list[tuple[float, float]] = field(default_factory=list)


def _golden_refine(f: Callable[[float], float], xs: Sequence[float], ys: Sequence[float], xtol: float):
    k = int(np.argmin(ys))
    best_x, best_y = xs[k], ys[k]
    if 0 < k < len(xs) - 1 and ys[k] < ys[k - 1] and ys[k] < ys[k + 1]:
        res = scipy.optimize.minimize_scalar(
            f, bracket=(xs[k - 1], xs[k], xs[k + 1]), method="golden", options={"xtol": xtol}
        )
        lo, hi = sorted((xs[k - 1], xs[k + 1]))
        if lo <= res.x <= hi and res.fun < best_y:
            best_x, best_y = float(res.x), float(res.fun)
    return best_x, best_y


def min_gap_scan(
    hp: DiagonalHamiltonian, schedule: Schedule, grid_points: int = 41, method: str = "auto"
) -> GapScan:
    """E1 - E0 sampled along the schedule, minimum refined by golden-section search."""
    if grid_points < 3:
        raise ValueError("grid_points must be at least 3")
    ts = np.linspace(0.0, schedule.tau, grid_points)
    gammas = [float(g) for g in schedule.gamma(ts)]
    gaps = [spectral_gap(hp, g, method) for g in gammas]
    g_star, gap_min = _golden_refine(lambda g: spectral_gap(hp, g, method), gammas, gaps, 1e-6)
    return GapScan(float(gap_min), float(g_star), list(zip(gammas, gaps)))


def _grover_gap(n: int, s: float) -> float:
    dim = 1 << n
    if n <= DENSE_LIMIT:
        u = np.full(dim, dim ** -0.5)
        mat = np.eye(dim) - (1.0 - s) * np.outer(u, u)
        mat[0, 0] -= s
        w = scipy.linalg.eigh(mat, eigvals_only=True, subset_by_index=[0, 1])
    else:
        # Everything orthogonal to span{u, |0>} is an eigenvector with eigenvalue 1,
        # so the two lowest levels come from the 2x2 block on that span.
        u0 = dim ** -0.5
        e1 = np.array([1.0, 0.0])
        u = np.array([u0, math.sqrt(1.0 - u0 * u0)])
        block = np.eye(2) - (1.0 - s) * np.outer(u, u) - s * np.outer(e1, e1)
        w = np.linalg.eigvalsh(block)
    return float(w[1] - w[0])


def grover_gap_curve(n: int, s: float) -> float:
    """Closed form sqrt((1-2s)^2 + 4 s (1-s) / N)."""
    big_n = 2.0 ** n
    return math.sqrt((1 - 2 * s) ** 2 + 4 * s * (1 - s) / big_n)


def grover_gap_scan(n: int, grid_points: int = 21) -> GapScan:
    """Minimum gap of (1-s)(I - |u><u|) + s(I - |m><m|) over s in [0, 1]."""
    if not 1 <= n <= 14:
        raise ValueError("grover_gap_scan supports 1 <= n <= 14")
    ss = [float(s) for s in np.linspace(0.0, 1.0, grid_points)]
    gaps = [_grover_gap(n, s) for s in ss]
    s_star, gap_min = _golden_refine(lambda s: _grover_gap(n, s), ss, gaps, 1e-9)
    return GapScan(gap_min, s_star, list(zip(ss, gaps)))


# --- Landau-Zener -----------------------------------------------------------


def landau_zener_probability(gap_min: float, sweep_rate: float) -> float:
    """Diabatic (excitation) probability exp(-pi gap^2 / (2 v)), hbar = 1."""
    if sweep_rate <= 0:
        raise ValueError("sweep rate must be positive")
    if gap_min < 0:
        raise ValueError("gap must be non-negative")
    return math.exp(-math.pi * gap_min ** 2 / (2.0 * sweep_rate))


@numba.njit(cache=True)
def _two_level_magnus(delta, half_window, steps, a0, a1):
    # 4th-order Magnus steps for H(t) = t/2 Z + delta/2 X in rescaled time.
    h = 2.0 * half_window / steps
    for k in range(steps):
        tm = -half_window + (k + 0.5) * h
        mz = 0.5 * h * tm
        mx = 0.5 * h * delta
        my = h * h * h * delta / 24.0
        r = math.sqrt(mx * mx + my * my + mz * mz)
        c = math.cos(r)
        s = math.sin(r) / r
        u00 = c - 1j * s * mz
        u11 = c + 1j * s * mz
        u01 = -1j * s * (mx - 1j * my)
        u10 = -1j * s * (mx + 1j * my)
        a0, a1 = u00 * a0 + u01 * a1, u10 * a0 + u11 * a1
    return a0, a1


def _dressed_basis(delta: float, t: float):
    theta = math.atan2(delta, t)
    ground = np.array([-math.sin(theta / 2), math.cos(theta / 2)])
    excited = np.array([math.cos(theta / 2), math.sin(theta / 2)])
    # first-order superadiabatic admixture i<e|dg/dt> / (E_e - E_g)
    alpha = 1j * delta / (2.0 * (t * t + delta * delta) ** 1.5)
    return ground, excited, alpha


def two_level_sweep_probability(gap: float, sweep_rate: float, half_window: float = 400.0,
                                phase_step: float = 0.1) -> float:
    """Excitation probability from direct integration of H(t) = [[v t/2, gap/2], [gap/2, -v t/2]].

    Time is rescaled by sqrt(v), so only gap / sqrt(v) matters.  The state
    starts in the dressed adiabatic ground state at -T and the transition
    amplitude is read out in the dressed basis at +T, which removes the
    O(T^-3) finite-window oscillation.  Double precision limits the result
    to probabilities above roughly 1e-26.
    """
    if sweep_rate <= 0:
        raise ValueError("sweep rate must be positive")
    delta = gap / math.sqrt(sweep_rate)
    T = float(half_window)
    steps = int(math.ceil(2 * T / (2 * phase_step / T)))
    g, e, alpha = _dressed_basis(delta, -T)
    psi = (g + alpha * e) / math.sqrt(1 + abs(alpha) ** 2)
    a0, a1 = _two_level_magnus(delta, T, steps, complex(psi[0]), complex(psi[1]))
    g, e, alpha = _dressed_basis(delta, T)
    amp_e = e[0] * a0 + e[1] * a1
    amp_g = g[0] * a0 + g[1] * a1
    return float(abs(amp_e - alpha * amp_g) ** 2)


# --- median runtime ---------------------------------------------------------


@dataclass
class RuntimeRow:
    n: int
    median_tau: float
    minimal_taus: list[float]
    censored: int
    discarded: int


@dataclass
class RuntimeExperiment:
    rows: list[RuntimeRow]
    slope: float | None
    slope_stderr: float | None
    slope_ci: tuple[float, float] | None
    fit_residuals: list[float]
    records: list[dict]


def minimal_tau(hp: DiagonalHamiltonian, tau_grid: Sequence[float], threshold: float,
                gamma0: float | None = None, profile: str = "linear", records: list | None = None,
                tag: dict | None = None) -> float:
    """Smallest tau in ``tau_grid`` reaching ``threshold`` success; inf if censored."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if gamma0 is None:
        gamma0 = default_gamma0(hp)
    for tau in sorted(tau_grid):
        t0 = time.perf_counter()
        res = run_adiabatic(hp, Schedule(float(tau), gamma0, profile))
        if records is not None:
            records.append({
                **(tag or {}),
                "tau": float(tau),
                "gamma0": gamma0,
                "success": res.success_probability,
                "residual": res.residual_energy,
                "norm_drift": res.norm_drift,
                "wall_time": time.perf_counter() - t0,
            })
        if res.success_probability >= threshold:
            return float(tau)
    return math.inf


def loglog_fit(xs: Sequence[float], ys: Sequence[float], confidence: float = 0.95):
    """Least-squares slope of log y vs log x with a t-distribution CI."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    if lx.size < 3:
        return None
    fit = scipy.stats.linregress(lx, ly)
    half = scipy.stats.t.ppf(0.5 + confidence / 2, lx.size - 2) * fit.stderr
    resid = ly - (fit.intercept + fit.slope * lx)
    return float(fit.slope), float(fit.stderr), (float(fit.slope - half), float(fit.slope + half)), [float(r) for r in resid]


def median_runtime_experiment(
    make_instance: Callable[[int, int], tuple[DiagonalHamiltonian | None, dict]],
    n_range: Sequence[int],
    instances: int,
    tau_grid: Sequence[float],
    threshold: float = 0.125,
    max_draws: int = 1000,
) -> RuntimeExperiment:
    """Median minimal tau per n.

    ``make_instance(n, draw)`` returns ``(hamiltonian, metadata)`` or
    ``(None, metadata)`` for a draw that must be discarded (e.g. an
    unsatisfiable 3-SAT formula); discards are resampled and counted.
    """
    rows, records = [], []
    for n in n_range:
        taus, discarded, draw = [], 0, 0
        while len(taus) < instances:
            if draw >= max_draws:
                raise RuntimeError(f"n={n}: too many discarded draws ({discarded})")
            hp, meta = make_instance(n, draw)
            draw += 1
            if hp is None:
                discarded += 1
                continue
            tag = {"n": n, **meta}
            taus.append(minimal_tau(hp, tau_grid, threshold, records=records, tag=tag))
        arr = np.asarray(taus)
        rows.append(RuntimeRow(n, float(np.median(arr)), taus, int(np.isinf(arr).sum()), discarded))
    finite = [(r.n, r.median_tau) for r in rows if math.isfinite(r.median_tau)]
    fit = loglog_fit([a for a, _ in finite], [b for _, b in finite]) if finite else None
    if fit is None:
        return RuntimeExperiment(rows, None, None, None, [], records)
    slope, stderr, ci, resid = fit
    return RuntimeExperiment(rows, slope, stderr, ci, resid, records)
