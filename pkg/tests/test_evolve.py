from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg

from aqc_workbench.evolve import (
    IntegrationError,
    Schedule,
    default_gamma0,
    grover_gap_curve,
    grover_gap_scan,
    initial_ground_state,
    instantaneous_spectrum,
    landau_zener_probability,
    large_field_gamma0,
    loglog_fit,
    median_runtime_experiment,
    min_gap_scan,
    minimal_tau,
    residual_energy,
    run_adiabatic,
    success_probability,
    sudden_success,
    transverse_polarization,
    two_level_sweep_probability,
)
from aqc_workbench.graphs import gen_exact_cover_usa
from aqc_workbench.hamiltonian import (
    DiagonalHamiltonian,
    build_exact_cover_hamiltonian,
    transverse_field_dense,
)


def sigma_z():
    return DiagonalHamiltonian.from_diagonal([1.0, -1.0])


def dense(hp, gamma):
    return np.diag(hp.diagonal()) + gamma * transverse_field_dense(hp.n)


class TestSchedule:
    def test_profiles(self):
        s = Schedule(10.0, 2.0)
        assert s.gamma(0) == 2.0 and s.gamma(10.0) == 0.0 and s.gamma(5.0) == 1.0
        q = Schedule(10.0, 2.0, "quadratic")
        assert q.gamma(5.0) == 0.5
        ts = np.linspace(0, 10, 50)
        assert np.all(np.diff(q.gamma(ts)) <= 0)

    @pytest.mark.parametrize("kw", [dict(tau=0, gamma0=1), dict(tau=1, gamma0=0), dict(tau=1, gamma0=1, profile="cubic")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            Schedule(**kw)


class TestInitialState:
    def test_constant_hp_is_product_state(self):
        n = 3
        psi = initial_ground_state(DiagonalHamiltonian.from_diagonal(np.zeros(8)), 0.5)
        signs = np.array([(-1) ** bin(b).count("1") for b in range(8)])
        assert np.allclose(psi, signs / 2 ** (n / 2))

    def test_single_spin(self):
        psi = initial_ground_state(sigma_z(), 1.0)
        h = np.array([[1, 1], [1, -1]])
        assert np.isclose(np.vdot(psi, h @ psi).real, -math.sqrt(2))

    def test_large_field_overlap(self):
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(6, 1))
        psi = initial_ground_state(hp, 10 * hp.max_abs_energy())
        plus = np.array([(-1) ** bin(b).count("1") for b in range(64)]) / 8
        assert abs(np.vdot(plus, psi)) ** 2 >= 0.99


class TestSpectrum:
    def test_gamma_zero_diagonal(self):
        hp = DiagonalHamiltonian.from_diagonal([3.0, 1.0, 1.0, 0.0])
        assert list(instantaneous_spectrum(hp, 0.0, 3).energies) == [0.0, 1.0, 1.0]

    def test_two_by_two(self):
        e = instantaneous_spectrum(sigma_z(), 1.0, 2).energies
        assert np.allclose(e, [-math.sqrt(2), math.sqrt(2)])

    @pytest.mark.parametrize("n", [4, 6, 8])
    def test_lanczos_matches_dense(self, n):
        rng = np.random.default_rng(n)
        hp = DiagonalHamiltonian.from_diagonal(rng.integers(0, 5, size=1 << n).astype(float))
        ref = scipy.linalg.eigvalsh(dense(hp, 0.8))[:3]
        got = instantaneous_spectrum(hp, 0.8, 3, method="lanczos")
        assert np.allclose(got.energies, ref, atol=1e-8)
        assert np.all(got.residuals <= 1e-8)
        assert np.all(np.diff(got.energies) >= 0)

    def test_vectors_are_eigenvectors(self):
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(5, 0))
        s = instantaneous_spectrum(hp, 0.6, 2, vectors=True)
        m = dense(hp, 0.6)
        for j in range(2):
            assert np.linalg.norm(m @ s.vectors[:, j] - s.energies[j] * s.vectors[:, j]) < 1e-8


class TestPolarizationDefault:
    def test_polarization_is_monotone(self):
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(6, 3))
        pol = [transverse_polarization(hp, g) for g in np.geomspace(0.05, 20, 15)]
        assert np.all(np.diff(pol) >= -1e-10)

    def test_default_hits_target(self):
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(6, 3))
        g0 = default_gamma0(hp)
        assert transverse_polarization(hp, g0) >= 0.9
        assert transverse_polarization(hp, g0 / 1.01) < 0.9

    def test_constant_and_large(self):
        assert default_gamma0(DiagonalHamiltonian.from_diagonal(np.ones(4))) == 1.0
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(6, 3))
        assert large_field_gamma0(hp) == max(10 * hp.max_abs_energy(), 60.0)


class TestRunAdiabatic:
    def test_adiabatic_limit_n4(self):
        hp = DiagonalHamiltonian.from_diagonal([0.0] + [1.0 + 0.25 * i for i in range(15)])
        res = run_adiabatic(hp, Schedule(200.0, default_gamma0(hp)))
        assert res.success_probability >= 0.99
        assert res.norm_drift <= 1e-6

    def test_sudden_limit(self):
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(5, 2))
        g0 = default_gamma0(hp)
        res = run_adiabatic(hp, Schedule(1e-4, g0))
        assert abs(res.success_probability - sudden_success(hp, g0)) <= 0.01

    def test_matches_expm_propagator(self):
        # independent oracle: product of exact midpoint exponentials on a fine grid
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(4, 0))
        sched = Schedule(3.0, 1.5)
        res = run_adiabatic(hp, sched, dt=1e-3)
        psi = initial_ground_state(hp, 1.5)
        steps = 3000
        h = sched.tau / steps
        for k in range(steps):
            psi = scipy.linalg.expm(-1j * h * dense(hp, float(sched.gamma((k + 0.5) * h)))) @ psi
        assert abs(abs(np.vdot(psi, res.final_state)) - 1) < 1e-5

    def test_success_monotone_on_gapped_ladder(self):
        hp = DiagonalHamiltonian.from_diagonal([0.0, 2.0, 2.0, 3.0, 2.0, 3.0, 3.0, 4.0])
        g0 = default_gamma0(hp)
        scan = min_gap_scan(hp, Schedule(1.0, g0))
        assert scan.gap >= 0.5
        succ = [run_adiabatic(hp, Schedule(t, g0)).success_probability for t in (20, 40, 80, 160)]
        assert succ[-1] >= 0.99
        assert all(b >= a - 1e-3 for a, b in zip(succ, succ[1:]))

    def test_drift_guard(self):
        hp = DiagonalHamiltonian.from_diagonal(np.linspace(0, 50, 8))
        with pytest.raises(IntegrationError):
            run_adiabatic(hp, Schedule(5.0, 5.0), dt=0.2)

    def test_result_invariants(self):
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(5, 4))
        res = run_adiabatic(hp, Schedule(3.0, default_gamma0(hp)), scan_gap=True)
        assert 0 <= res.success_probability <= 1
        assert res.residual_energy >= -1e-9
        assert res.min_gap[0] > 0


class TestObservables:
    def test_ground_state(self):
        hp = DiagonalHamiltonian.from_diagonal([0.0, 1.0, 1.0, 1.0])
        e0 = np.array([1, 0, 0, 0], dtype=complex)
        assert residual_energy(e0, hp) == 0 and success_probability(e0, hp) == 1

    def test_uniform(self):
        hp = DiagonalHamiltonian.from_diagonal([0.0, 1.0, 1.0, 1.0])
        u = np.full(4, 0.5, dtype=complex)
        assert np.isclose(residual_energy(u, hp), 0.75)
        assert np.isclose(success_probability(u, hp), 0.25)

    def test_first_excited(self):
        hp = DiagonalHamiltonian.from_diagonal([0.0, 2.5, 3.0, 4.0])
        e1 = np.array([0, 1, 0, 0], dtype=complex)
        assert residual_energy(e1, hp) == 2.5 and success_probability(e1, hp) == 0

    def test_degenerate_ground_space(self):
        hp = DiagonalHamiltonian.from_diagonal([0.0, 0.0, 1.0, 1.0])
        assert np.isclose(success_probability(np.full(4, 0.5), hp), 0.5)


class TestGaps:
    def test_constant_hp_gap(self):
        hp = DiagonalHamiltonian.from_diagonal(np.full(8, 3.0))
        scan = min_gap_scan(hp, Schedule(1.0, 2.0), grid_points=5)
        for g, gap in scan.samples[:-1]:
            assert np.isclose(gap, 2 * g)
        assert scan.gap <= min(gap for _, gap in scan.samples) + 1e-12

    @pytest.mark.parametrize("n,expected", [(2, 0.5), (4, 0.25)])
    def test_grover_examples(self, n, expected):
        assert abs(grover_gap_scan(n).gap - expected) < 1e-9

    def test_grover_closed_form_curve(self):
        scan = grover_gap_scan(5)
        for s, gap in scan.samples:
            assert abs(gap - grover_gap_curve(5, s)) < 1e-10

    def test_grover_two_by_two_branch(self):
        assert abs(grover_gap_scan(12).gap - 2 ** -6) < 1e-9


class TestLandauZener:
    def test_limits(self):
        assert landau_zener_probability(0.0, 0.1) == 1.0
        assert landau_zener_probability(0.1, 1e-9) < 1e-300
        with pytest.raises(ValueError):
            landau_zener_probability(0.1, 0.0)

    def test_example(self):
        p = landau_zener_probability(0.1, 0.01)
        assert math.isclose(p, math.exp(-math.pi / 2), rel_tol=1e-12)
        assert abs(two_level_sweep_probability(0.1, 0.01) - p) / p < 0.02


class TestMedianRuntime:
    def test_threshold_monotonicity(self):
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(6, 0))
        grid = [1, 2, 5, 10, 20, 50]
        taus = [minimal_tau(hp, grid, t) for t in (0.9, 0.5, 0.2)]
        assert taus[0] >= taus[1] >= taus[2]

    def test_censored_and_discarded(self):
        def draw(n, k):
            if k % 2 == 0:
                return None, {}
            return build_exact_cover_hamiltonian(gen_exact_cover_usa(n, k)), {}

        exp = median_runtime_experiment(draw, [5, 6], 3, [0.5], threshold=0.99)
        assert all(r.censored == 3 and r.discarded == 3 for r in exp.rows)
        assert all(math.isinf(r.median_tau) for r in exp.rows)
        assert exp.slope is None

    def test_loglog_fit(self):
        slope, se, ci, resid = loglog_fit([2, 4, 8, 16], [3 * x ** 2 for x in (2, 4, 8, 16)])
        assert abs(slope - 2) < 1e-12 and ci[0] <= 2 <= ci[1]
