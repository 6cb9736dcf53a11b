from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqc_workbench.graphs import (
    CnfFormula,
    ExactCoverInstance,
    Graph,
    brute_force_mis,
    gen_exact_cover_usa,
    gen_random_3sat,
    gen_random_graph,
    sat_mask,
    basis_indices,
    spin_table,
    spins_from_index,
)
from aqc_workbench.hamiltonian import (
    DiagonalHamiltonian,
    IsingModel,
    PerturbationSpec,
    apply_hamiltonian,
    apply_pauli_term,
    apply_perturbation,
    build_3sat_hamiltonian,
    build_exact_cover_hamiltonian,
    build_mis_ising_corrected,
    build_mis_ising_unit,
    build_random_field_ising,
    build_scaled_family,
    check_state,
    ground_states,
    ising_energy,
    ising_to_diagonal,
    random_perturbation,
    transverse_field_dense,
    truncated_normal,
)

from conftest import random_state

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.diag([1.0, -1.0]).astype(complex),
}


def dense_pauli(n: int, ops) -> np.ndarray:
    """Kronecker-product oracle: qubit i is bit i of the basis index."""
    out = np.eye(1, dtype=complex)
    factors = {q: PAULI[a] for q, a in ops}
    for q in reversed(range(n)):
        out = np.kron(out, factors.get(q, np.eye(2)))
    return out


def dense_perturbation(p: PerturbationSpec) -> np.ndarray:
    dim = 1 << p.n
    mat = np.zeros((dim, dim), dtype=complex)
    for coeff, ops in p.terms():
        mat += coeff * dense_pauli(p.n, ops)
    return mat


class TestIsingModel:
    def test_unit_model_k2_energies(self, k2):
        m = build_mis_ising_unit(k2)
        assert ising_energy(m, np.array([1, 1])) == 3
        assert ising_energy(m, np.array([-1, 1])) == -1

    def test_zero_model(self):
        m = IsingModel(3, np.zeros(3))
        assert all(ising_energy(m, s) == 0 for s in spin_table(3))

    def test_dimension_mismatch(self, k2):
        with pytest.raises(ValueError):
            ising_energy(build_mis_ising_unit(k2), np.array([1, 1, 1]))

    def test_rejects_diagonal_and_duplicate(self):
        with pytest.raises(ValueError):
            IsingModel(2, np.zeros(2), {(1, 1): 1.0})
        with pytest.raises(ValueError):
            IsingModel(2, np.zeros(2), {(0, 1): 1.0, (1, 0): 2.0})

    def test_json_round_trip(self):
        m = build_random_field_ising(4, [(0, 1), (1, 2), (2, 3)], seed=3)
        back = IsingModel.from_json(m.to_json())
        assert back.n == m.n and np.array_equal(back.h, m.h) and back.J == m.J

    def test_diagonal_agrees_with_ising_energy(self):
        rng = np.random.default_rng(0)
        for n in (1, 5, 12):
            g = gen_random_graph(n, 0.4, rng)
            m = IsingModel(n, rng.normal(size=n), {e: float(rng.normal()) for e in g.edge_list()})
            d = ising_to_diagonal(m).diagonal()
            table = spin_table(n)
            ref = np.array([ising_energy(m, s) for s in table])
            assert np.allclose(d, ref, atol=1e-12)


class TestMisModels:
    def test_unit_model(self, k2, p3):
        m = build_mis_ising_unit(k2)
        assert list(m.h) == [1, 1] and m.J == {(0, 1): 1.0}
        m = build_mis_ising_unit(Graph.empty(3))
        assert list(m.h) == [1, 1, 1] and m.J == {}
        m = build_mis_ising_unit(p3)
        assert m.J == {(0, 1): 1.0, (1, 2): 1.0}

    def test_corrected_p3(self, p3):
        m = build_mis_ising_corrected(p3, 2.0)
        assert np.allclose(2 * m.h, [0, 1, 0]) and all(2 * v == 1 for v in m.J.values())
        _, ground = ground_states(m)
        assert [list(spins_from_index(b, 3)) for b in ground] == [[1, -1, 1]]

    def test_corrected_triangle(self, triangle):
        _, ground = ground_states(build_mis_ising_corrected(triangle))
        decoded = sorted(tuple(np.flatnonzero(spins_from_index(b, 3) == 1)) for b in ground)
        assert decoded == [(0,), (1,), (2,)]

    def test_corrected_edgeless(self):
        for penalty in (1.5, 3.0):
            _, ground = ground_states(build_mis_ising_corrected(Graph.empty(4), penalty))
            assert ground == [0]

    def test_corrected_rejects_small_penalty(self, k2):
        with pytest.raises(ValueError):
            build_mis_ising_corrected(k2, 1.0)

    @pytest.mark.parametrize("penalty", [1.5, 2.0, 4.0])
    def test_corrected_matches_oracle(self, penalty):
        for s in range(15):
            g = gen_random_graph(int(2 + s % 9), 0.4, s)
            _, sets = brute_force_mis(g)
            _, ground = ground_states(build_mis_ising_corrected(g, penalty))
            decoded = {frozenset(np.flatnonzero(spins_from_index(b, g.n) == 1).tolist()) for b in ground}
            assert decoded == set(sets)

    def test_scaled_family(self, k2, p3):
        assert build_scaled_family(p3, [1, 1, 1]).J == build_mis_ising_unit(p3).J
        m = build_scaled_family(k2, [2, 3])
        assert list(m.h) == [2, 3] and m.J == {(0, 1): 6.0}
        m = build_scaled_family(p3, [0.1, 1, 0.1])
        assert np.allclose(m.h, [0.1, 1, 0.1]) and np.allclose(list(m.J.values()), [0.1, 0.1])
        with pytest.raises(ValueError):
            build_scaled_family(k2, [1, 0])


class TestRandomField:
    def test_truncation_and_mean(self):
        x = truncated_normal(np.random.default_rng(1), 10_000)
        assert np.all(np.abs(x) <= 1)
        # truncated standard normal on [-1, 1]: variance 0.2911
        assert abs(x.mean()) <= 5 * np.sqrt(0.2911 / x.size)

    def test_single_edge(self):
        m = build_random_field_ising(2, [(0, 1)], seed=0)
        assert len(m.J) == 1 and np.all(m.h == 0)

    def test_reproducible(self):
        a = build_random_field_ising(6, [(0, 1), (2, 3)], seed=9)
        b = build_random_field_ising(6, [(0, 1), (2, 3)], seed=9)
        assert a.J == b.J


class TestClauseHamiltonians:
    def test_3sat_single_clause(self):
        f = CnfFormula(3, (((0, False), (1, False), (2, False)),))
        hp = build_3sat_hamiltonian(f)
        assert hp.energy(0) == 1
        assert hp.diagonal().sum() == 1

    def test_3sat_zero_iff_satisfied(self):
        for s in range(5):
            f = gen_random_3sat(9, seed=s)
            d = build_3sat_hamiltonian(f).diagonal()
            assert np.array_equal(d == 0, sat_mask(f, basis_indices(9)))

    def test_exact_cover_examples(self):
        hp = build_exact_cover_hamiltonian(ExactCoverInstance(3, ((0, 1, 2),)))
        assert hp.energy(0b001) == 0
        assert hp.energy(0b111) == 4
        assert hp.energy(0b000) == 1

    def test_exact_cover_indicator(self):
        hp = build_exact_cover_hamiltonian(ExactCoverInstance(3, ((0, 1, 2),)), indicator=True)
        assert hp.energy(0b111) == 1

    def test_usa_ground_is_unique_zero(self):
        hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(8, 2))
        assert hp.ground_energy() == 0 and hp.ground_indices().size == 1


class TestTransverseOperator:
    def test_gamma_zero_is_diagonal(self):
        rng = np.random.default_rng(0)
        hp = DiagonalHamiltonian.from_diagonal(rng.normal(size=16))
        psi = random_state(4, rng)
        assert np.allclose(apply_hamiltonian(hp, 0.0, psi), hp.diagonal() * psi)

    def test_single_flip(self):
        hp = DiagonalHamiltonian.from_diagonal(np.zeros(2))
        assert np.allclose(apply_hamiltonian(hp, 1.0, np.array([1, 0])), [0, 1])

    @pytest.mark.parametrize("n", [1, 3, 6])
    def test_matches_dense(self, n):
        rng = np.random.default_rng(n)
        hp = DiagonalHamiltonian.from_diagonal(rng.normal(size=1 << n))
        dense = np.diag(hp.diagonal()) + 0.7 * transverse_field_dense(n)
        assert np.allclose(dense, dense.conj().T)
        psi = random_state(n, rng)
        assert np.allclose(apply_hamiltonian(hp, 0.7, psi), dense @ psi, atol=1e-12)

    def test_dense_field_matches_kron(self):
        n = 3
        ref = sum(dense_pauli(n, [(i, "x")]) for i in range(n))
        assert np.allclose(transverse_field_dense(n), ref)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
    def test_linearity(self, a, g, seed):
        rng = np.random.default_rng(seed)
        hp = DiagonalHamiltonian.from_diagonal(rng.normal(size=32))
        x, y = random_state(5, rng), random_state(5, rng)
        lhs = apply_hamiltonian(hp, g, a * x + y)
        assert np.allclose(lhs, a * apply_hamiltonian(hp, g, x) + apply_hamiltonian(hp, g, y))
        zero = DiagonalHamiltonian.from_diagonal(np.zeros(32))
        assert np.allclose(apply_hamiltonian(zero, 2 * g, x), 2 * apply_hamiltonian(zero, g, x))

    def test_dimension_mismatch(self):
        hp = DiagonalHamiltonian.from_diagonal(np.zeros(4))
        with pytest.raises(ValueError):
            apply_hamiltonian(hp, 1.0, np.ones(8))

    def test_state_check(self):
        with pytest.raises(ValueError):
            check_state(np.ones(4), 2)


class TestPerturbation:
    def test_sigma_z(self):
        p = PerturbationSpec(1, {(0, "z"): 1.0})
        assert np.allclose(apply_perturbation(p, [1, 0]), [1, 0])
        assert np.allclose(apply_perturbation(p, [0, 1]), [0, -1])

    def test_sigma_y(self):
        p = PerturbationSpec(1, {(0, "y"): 1.0})
        assert np.allclose(apply_perturbation(p, [1, 0]), [0, 1j])

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_matches_dense_and_hermitian(self, n):
        rng = np.random.default_rng(10 + n)
        p = random_perturbation(n, 0.3, rng)
        dense = dense_perturbation(p)
        assert np.allclose(dense, dense.conj().T, atol=1e-12)
        psi = random_state(n, rng)
        assert np.allclose(apply_perturbation(p, psi), dense @ psi, atol=1e-12)

    def test_each_term_hits_one_basis_state(self):
        n = 3
        p = random_perturbation(n, 1.0, 0)
        for _, ops in p.terms():
            for b in range(1 << n):
                e = np.zeros(1 << n, dtype=complex)
                e[b] = 1
                assert np.count_nonzero(apply_pauli_term(ops, e, n)) == 1

    def test_lambda_and_validation(self):
        p = PerturbationSpec(3, {(0, "x"): -0.2}, {(2, 1, "x", "z"): 0.05})
        assert p.lam == 0.2
        with pytest.raises(ValueError):
            PerturbationSpec(3, {}, {(1, 2, "x", "x"): 0.1})
        with pytest.raises(ValueError):
            PerturbationSpec(2, {(2, "x"): 0.1})
        with pytest.raises(ValueError):
            PerturbationSpec(2, {(0, "w"): 0.1})


def test_diagonal_hamiltonian_pickles():
    import pickle

    from aqc_workbench.graphs import gen_exact_cover_usa
    from aqc_workbench.hamiltonian import build_exact_cover_hamiltonian

    hp = build_exact_cover_hamiltonian(gen_exact_cover_usa(5, 0))
    back = pickle.loads(pickle.dumps(hp))
    assert back.n == hp.n and np.array_equal(back.diagonal(), hp.diagonal())
