"""Diagonal ensembles, variance identities, equilibration bounds."""

import math

import numpy as np
import pytest

from ergolab.ensembles import (
    DiagonalEnsemble,
    Observable,
    bond_observable,
    check_variance_bounds,
    ensemble_expectation,
    evolve,
    expectation_trajectory,
    random_local_observable,
    site_observable,
    subsystem_equilibration,
    variance_exact,
    variance_sampled,
)
from ergolab.hamiltonians import LocalHamiltonian, LocalTerm, diagonalize
from ergolab.operators import pauli
from ergolab.states import LatticeSpec, PureState, basis_product_state, random_product_state


@pytest.fixture(scope="module")
def ens6(spec6_module):
    psi = random_product_state(spec6_module.lattice, 11)
    return DiagonalEnsemble(spec6_module, psi)


@pytest.fixture(scope="module")
def spec6_module():
    from ergolab.hamiltonians import build_model

    return diagonalize(build_model("mixed-field-ising", LatticeSpec(6, 2)))


def test_populations_sum_to_one(ens6):
    assert ens6.populations.sum() == pytest.approx(1.0, abs=1e-10)
    assert ens6.num_blocks == 64  # generic spectrum: every level its own block


def test_eigenstate_gives_pure_ensemble(spec6_module):
    k = 17
    psi = PureState(spec6_module.lattice, spec6_module.eigenvectors[:, k].astype(complex))
    ens = DiagonalEnsemble(spec6_module, psi)
    assert ens.is_pure
    assert ens.entropy(2.0) == pytest.approx(0.0, abs=1e-10)
    assert ens.effective_dimension == pytest.approx(1.0, abs=1e-8)
    a = site_observable(spec6_module.lattice, 2)
    assert variance_exact(ens, a) == pytest.approx(0.0, abs=1e-12)


def test_ensemble_matrix_is_dephased_state(ens6, spec6_module):
    v = spec6_module.eigenvectors
    want = (v * ens6.populations) @ v.conj().T
    assert np.allclose(ens6.matrix().matrix, want, atol=1e-10)


def test_effective_dimension_identity(ens6):
    assert ens6.effective_dimension == pytest.approx(math.exp(ens6.entropy(2.0)), rel=1e-10)


def test_variance_exact_against_dense_oracle(spec6_module):
    """Nondegenerate case: Var = sum_{i != j} p_i p_j |A_ij|^2."""
    psi = random_product_state(spec6_module.lattice, 3)
    ens = DiagonalEnsemble(spec6_module, psi)
    a = random_local_observable(spec6_module.lattice, (2, 3), seed=9)
    v = spec6_module.eigenvectors
    c = v.conj().T @ psi.amplitudes
    p = np.abs(c) ** 2
    a_eig = v.conj().T @ a.matrix @ v
    off = np.abs(a_eig) ** 2
    np.fill_diagonal(off, 0.0)
    want = float((p[:, None] * p[None, :] * off).sum())
    assert variance_exact(ens, a) == pytest.approx(want, rel=1e-9, abs=1e-14)


def test_variance_degenerate_blocks_excluded():
    # H = Z0 + Z1: eigenvalues {-2, 0, 0, 2}; the 0-block must not
    # contribute to the variance even though |A_ij| is nonzero there
    lat = LatticeSpec(2, 2)
    terms = [LocalTerm((0,), pauli("Z"), "z0"), LocalTerm((1,), pauli("Z"), "z1")]
    spec = diagonalize(LocalHamiltonian(lat, terms))
    amps = np.array([0.5, 0.5, 0.5, 0.5], dtype=complex)
    ens = DiagonalEnsemble(spec, PureState(lat, amps))
    assert ens.num_blocks == 3
    a = Observable(lat, np.kron(pauli("X"), np.eye(2)), "X0")
    got = variance_exact(ens, a)
    # dense oracle over blocks
    w = ens.block_vectors()
    m = w.conj().T @ a.matrix @ w
    want = float((np.abs(m) ** 2).sum() - (np.abs(np.diag(m)) ** 2).sum())
    assert got == pytest.approx(want, abs=1e-12)


def test_variance_bounds_hold(ens6, spec6_module):
    for site in (0, 2, 5):
        rep = check_variance_bounds(ens6, site_observable(spec6_module.lattice, site))
        assert rep.passed
        assert rep.variance <= rep.bound_s2 + 1e-12
        assert rep.variance <= rep.bound_trimmed + 1e-12


def test_trimmed_bound_formula(ens6):
    a = site_observable(ens6.spectral.lattice, 1)
    rep = check_variance_bounds(ens6, a)
    p = np.sort(ens6.populations)[::-1]
    assert rep.bound_trimmed == pytest.approx(3.0 * rep.observable_norm**2 * p[1], rel=1e-10)
    assert rep.s_inf_trimmed == pytest.approx(-math.log(p[1]), rel=1e-10)


def test_pure_ensemble_bounds_trivial(spec6_module):
    psi = PureState(spec6_module.lattice, spec6_module.eigenvectors[:, 5].astype(complex))
    ens = DiagonalEnsemble(spec6_module, psi)
    rep = check_variance_bounds(ens, site_observable(spec6_module.lattice, 3))
    assert rep.fully_equilibrated
    assert rep.passed


def test_evolution_preserves_populations(spec6_module):
    psi = random_product_state(spec6_module.lattice, 2)
    ens0 = DiagonalEnsemble(spec6_module, psi)
    ens1 = DiagonalEnsemble(spec6_module, evolve(spec6_module, psi, 3.7))
    assert np.allclose(ens0.populations, ens1.populations, atol=1e-12)


def test_trajectory_endpoints(spec6_module):
    psi = random_product_state(spec6_module.lattice, 4)
    a = site_observable(spec6_module.lattice, 3)
    vals = expectation_trajectory(spec6_module, psi, a, np.array([0.0, 1.5]))
    direct = (psi.amplitudes.conj() @ a.matrix @ psi.amplitudes).real
    assert vals[0] == pytest.approx(direct, abs=1e-12)
    at_t = evolve(spec6_module, psi, 1.5)
    direct_t = (at_t.amplitudes.conj() @ a.matrix @ at_t.amplitudes).real
    assert vals[1] == pytest.approx(direct_t, abs=1e-12)


def test_ensemble_expectation_is_population_average(ens6, spec6_module):
    a = site_observable(spec6_module.lattice, 0)
    v = spec6_module.eigenvectors
    diag = np.einsum("ij,jk,ki->i", v.conj().T, a.matrix, v).real
    want = float(ens6.populations @ diag)
    assert ensemble_expectation(ens6, a) == pytest.approx(want, abs=1e-10)


def test_sampled_variance_converges(spec6_module):
    psi = random_product_state(spec6_module.lattice, 8)
    ens = DiagonalEnsemble(spec6_module, psi)
    a = site_observable(spec6_module.lattice, 3)
    exact = variance_exact(ens, a)
    sam = variance_sampled(spec6_module, psi, a, samples=2000, seed=0)
    assert abs(sam.value - exact) <= max(0.05 * exact, 3.0 * sam.stderr)
    assert sam.samples == 2000
    assert sam.horizon > 0


def test_subsystem_equilibration_bound(spec6_module):
    psi = random_product_state(spec6_module.lattice, 5)
    rep = subsystem_equilibration(spec6_module, psi, (3,), samples=100, seed=1)
    assert rep.passed
    assert rep.mean_distance <= rep.bound + 1e-12
    assert rep.subsystem_dim == 2
    assert rep.max_distance >= rep.mean_distance


def test_observable_helpers(spec6_module):
    lat = spec6_module.lattice
    z3 = site_observable(lat, 3, "Z")
    assert z3.norm == pytest.approx(1.0)
    assert z3.matrix.shape == (64, 64)
    b = bond_observable(lat, 2)
    assert b.norm == pytest.approx(1.0)
    r1 = random_local_observable(lat, (1, 4), seed=3)
    r2 = random_local_observable(lat, (1, 4), seed=3)
    assert np.array_equal(r1.matrix, r2.matrix)
