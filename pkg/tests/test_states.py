"""Lattice bookkeeping, bipartitions, partial traces, serialization."""

import numpy as np
import pytest

from ergolab.states import (
    DensityMatrix,
    LatticeSpec,
    PureState,
    ResourceGuardError,
    basis_product_state,
    bipartition_matrix,
    density_from_pure,
    fidelity,
    load_state,
    maximally_entangled,
    overlap,
    partial_trace,
    random_product_state,
    save_state,
    site_set,
    state_from_json,
    state_to_json,
    tensor_product,
    trace_distance,
)


def test_lattice_validation():
    with pytest.raises(ValueError):
        LatticeSpec(0, 2)
    with pytest.raises(ValueError):
        LatticeSpec(4, 1)
    with pytest.raises(ValueError):
        LatticeSpec(4, 2, "ring")
    with pytest.raises(ResourceGuardError):
        LatticeSpec(70, 2)
    assert LatticeSpec(1, 2).dim == 2
    assert LatticeSpec(5, 3).dim == 243


def test_site_set_validation_and_props():
    lat = LatticeSpec(5, 2)
    s = site_set(lat, (3, 0))
    assert s.sites == (0, 3)  # stored sorted
    assert s.dim == 4
    assert s.complement().sites == (1, 2, 4)
    assert site_set(lat, (1, 2, 3)).is_contiguous()
    assert not s.is_contiguous()
    assert s.bitmask() == (1 << 0) | (1 << 3)
    with pytest.raises(ValueError):
        site_set(lat, (0, 5))
    # repeated indices collapse rather than error
    assert site_set(lat, (1, 1)).sites == (1,)


def test_basis_state_digit_convention():
    # site 0 is the most significant base-d digit
    lat = LatticeSpec(3, 2)
    psi = basis_product_state(lat, (1, 0, 0))
    assert np.nonzero(psi.amplitudes)[0].tolist() == [4]
    psi = basis_product_state(lat, (0, 0, 1))
    assert np.nonzero(psi.amplitudes)[0].tolist() == [1]


def test_pure_state_normalization_enforced():
    lat = LatticeSpec(2, 2)
    with pytest.raises(ValueError):
        PureState(lat, np.array([1.0, 1.0, 0.0, 0.0]))
    PureState(lat, np.array([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2))


def test_bipartition_matrix_schmidt():
    lat = LatticeSpec(4, 2)
    psi = random_product_state(lat, 7)
    m = bipartition_matrix(psi.amplitudes, (0, 2), lat)
    assert m.shape == (4, 4)
    sv = np.linalg.svd(m, compute_uv=False)
    # product state: exactly one Schmidt coefficient
    assert sv[0] == pytest.approx(1.0, abs=1e-12)
    assert sv[1] == pytest.approx(0.0, abs=1e-12)
    assert np.linalg.norm(m) == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_product_state(rng):
    lat = LatticeSpec(4, 2)
    psi = random_product_state(lat, rng)
    for sites in [(0,), (1, 3), (0, 1, 2)]:
        rho = partial_trace(psi, sites)
        assert rho.matrix.shape == (2 ** len(sites),) * 2
        purity = np.trace(rho.matrix @ rho.matrix).real
        assert purity == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_against_einsum_oracle(rng):
    lat = LatticeSpec(3, 2)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    psi = PureState(lat, amps)
    t = amps.reshape(2, 2, 2)
    want = np.einsum("abc,dbe->acde", t, t.conj()).reshape(4, 4)
    got = partial_trace(psi, (0, 2)).matrix
    assert np.allclose(got, want, atol=1e-12)


def test_complementary_spectra_match(rng):
    # Schmidt duality: both halves of a pure state share a spectrum
    lat = LatticeSpec(5, 2)
    amps = rng.normal(size=32) + 1j * rng.normal(size=32)
    amps /= np.linalg.norm(amps)
    psi = PureState(lat, amps)
    a = np.linalg.eigvalsh(partial_trace(psi, (0, 3)).matrix)
    b = np.linalg.eigvalsh(partial_trace(psi, (1, 2, 4)).matrix)
    assert np.allclose(sorted(a)[::-1][:4], sorted(b)[::-1][:4], atol=1e-10)


def test_maximally_entangled_marginal():
    lat = LatticeSpec(4, 2)
    psi = maximally_entangled(lat, (0, 1))
    rho = partial_trace(psi, (0, 1))
    assert np.allclose(rho.matrix, np.eye(4) / 4, atol=1e-12)


def test_overlap_fidelity_trace_distance(rng):
    lat = LatticeSpec(3, 2)
    a = random_product_state(lat, rng)
    b = random_product_state(lat, rng)
    f = fidelity(a, b)
    # Uhlmann convention: pure-state fidelity is |<a|b>|, not its square
    assert f == pytest.approx(abs(overlap(a, b)), abs=1e-12)
    # ||rho-sigma||_1 = 2 sqrt(1-F^2) for pure states (no 1/2 prefactor)
    td = trace_distance(a, b)
    assert td == pytest.approx(2.0 * np.sqrt(1.0 - f**2), abs=1e-10)
    assert trace_distance(a, a) == pytest.approx(0.0, abs=1e-12)


def test_density_from_pure_and_mixed_distance():
    lat = LatticeSpec(2, 2)
    up = basis_product_state(lat, (0, 0))
    down = basis_product_state(lat, (1, 1))
    rho = DensityMatrix(lat, 0.5 * density_from_pure(up).matrix + 0.5 * density_from_pure(down).matrix)
    assert trace_distance(rho, density_from_pure(up)) == pytest.approx(1.0, abs=1e-12)


def test_tensor_product():
    a = basis_product_state(LatticeSpec(2, 2), (0, 1))
    b = basis_product_state(LatticeSpec(1, 2), (1,))
    ab = tensor_product(a, b)
    assert ab.lattice.num_sites == 3
    assert np.nonzero(ab.amplitudes)[0].tolist() == [0b011]


def test_binary_round_trip(tmp_path, rng):
    lat = LatticeSpec(4, 2)
    amps = rng.normal(size=16) + 1j * rng.normal(size=16)
    amps /= np.linalg.norm(amps)
    psi = PureState(lat, amps)
    path = str(tmp_path / "state.bin")
    save_state(path, psi)
    back = load_state(path)
    assert back.lattice == psi.lattice
    assert np.array_equal(back.amplitudes, psi.amplitudes)


def test_json_round_trip(rng):
    lat = LatticeSpec(3, 2)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    amps /= np.linalg.norm(amps)
    psi = PureState(lat, amps)
    back = state_from_json(state_to_json(psi))
    assert np.allclose(back.amplitudes, psi.amplitudes, atol=0)
    assert back.lattice == psi.lattice


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a state")
    with pytest.raises(Exception):
        load_state(str(path))
