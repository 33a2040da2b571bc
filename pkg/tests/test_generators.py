import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analogctl.generators import (GeneratorBasis, basis_for_dimension, expansion_coefficients,
                                  gell_mann_basis, generalized_gell_mann_basis, pauli_basis,
                                  reconstruct, so_adjoint_generators, trace_coefficient)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)

ALL_BASES = [pauli_basis(), gell_mann_basis()] + [generalized_gell_mann_basis(d) for d in (2, 3, 4, 5)]


@pytest.mark.parametrize("basis", ALL_BASES, ids=lambda b: f"d{b.d}-{b.labels[0]}")
def test_basis_invariants(basis):
    S = basis.generators
    assert len(basis) == basis.d**2 - 1
    assert np.allclose(S, np.conj(np.swapaxes(S, 1, 2)), atol=1e-14)
    assert np.max(np.abs(np.einsum("jaa->j", S))) < 1e-14
    gram = np.einsum("jab,kba->jk", S, S)
    assert np.max(np.abs(gram - 2 * np.eye(len(S)))) < 1e-12


def test_pauli_order_and_values():
    S = pauli_basis().generators
    assert np.array_equal(S[0], SX)
    assert np.array_equal(S[1], SY)
    assert np.array_equal(S[2], SZ)
    assert np.trace(SX @ SY) == 0
    assert np.trace(SX @ SX) == 2


def test_gell_mann_conventions():
    g = gell_mann_basis().generators
    g6 = np.zeros((3, 3))
    g6[1, 2] = g6[2, 1] = 1
    assert np.array_equal(g[5], g6)
    assert np.allclose(g[7], np.diag([1, 1, -2]) / np.sqrt(3))
    assert np.isclose(np.trace(g[7] @ g[7]).real, 2)
    for k, s in enumerate((SX, SY, SZ)):
        assert np.array_equal(g[k][:2, :2], s)


def test_generalized_matches_standard_for_small_d():
    # same span and normalization; the generalized family may order differently
    for d, std in ((2, pauli_basis()), (3, gell_mann_basis())):
        gen = generalized_gell_mann_basis(d).generators
        overlap = np.einsum("jab,kba->jk", gen, std.generators).real / 2
        assert np.allclose(overlap @ overlap.T, np.eye(d * d - 1), atol=1e-12)
    assert basis_for_dimension(2).labels == pauli_basis().labels
    assert basis_for_dimension(3).labels == gell_mann_basis().labels


def test_trace_coefficient_examples():
    b = pauli_basis()
    assert trace_coefficient(b, SZ, 2) == pytest.approx(1.0)
    assert all(trace_coefficient(b, np.eye(2), j) == 0 for j in range(3))
    assert trace_coefficient(b, 0.3 * SX + 0.7 * SZ, 0) == pytest.approx(0.3)


def test_trace_coefficient_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        trace_coefficient(pauli_basis(), np.eye(3), 0)


def test_basis_validation():
    with pytest.raises(ValueError):
        GeneratorBasis(2, np.stack([SX, SY, 2 * SZ]))


def _random_hermitian(rng, d):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2


@pytest.mark.parametrize("d", [2, 3, 4])
def test_expansion_round_trip(d):
    rng = np.random.default_rng(d)
    basis = basis_for_dimension(d)
    for _ in range(100):
        A = _random_hermitian(rng, d)
        c = expansion_coefficients(basis, A)
        back = reconstruct(basis, c, np.trace(A).real)
        assert np.max(np.abs(A - back)) < 1e-10


def test_adjoint_example_value():
    # (sigma_z)_xy from Tr([S_x, S_z] S_y) / (4i), evaluated directly
    oracle = np.trace((SX @ SZ - SZ @ SX) @ SY) / 4j
    sig = so_adjoint_generators(pauli_basis())
    assert np.isclose(oracle, -1)
    assert sig[2][0, 1] == pytest.approx(oracle.real)


@pytest.mark.parametrize("basis", [pauli_basis(), gell_mann_basis()], ids=["d2", "d3"])
def test_adjoint_generators_real_antisymmetric(basis):
    sig = so_adjoint_generators(basis)
    assert sig.shape == (len(basis),) * 3
    assert np.isrealobj(sig) or np.max(np.abs(np.imag(sig))) < 1e-12
    assert np.max(np.abs(sig + np.swapaxes(sig, 1, 2))) < 1e-12


def test_so3_commutation_table():
    # brute force: [sig_i, sig_j] = sum_k c_ijk sig_k with c from the same trace formula
    sig = np.real(so_adjoint_generators(pauli_basis()))
    for i in range(3):
        for j in range(3):
            comm = sig[i] @ sig[j] - sig[j] @ sig[i]
            coeffs = np.einsum("kab,ab->k", sig, comm) / np.einsum("kab,kab->k", sig, sig)
            assert np.allclose(comm, np.einsum("k,kab->ab", coeffs, sig), atol=1e-12)
            assert abs(coeffs[3 - i - j] if i != j else 0) == pytest.approx(1.0 if i != j else 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=8, max_size=8), st.floats(-3, 3))
def test_reconstruct_inverts_expansion(coeffs, trace):
    basis = gell_mann_basis()
    A = reconstruct(basis, coeffs, trace)
    assert np.allclose(expansion_coefficients(basis, A), coeffs, atol=1e-10)
    assert np.isclose(np.trace(A).real, trace, atol=1e-10)
