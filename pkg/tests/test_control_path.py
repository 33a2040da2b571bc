import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from analogctl.control_path import (ControlPath, EulerChart, ExponentialChart, PulseTrainChart,
                                    energy_e, energy_es, euler_unitary, gate_distance,
                                    geodesic_init, geodesic_path, geodesic_unitaries,
                                    hamiltonian_extract, interval_hamiltonians, modulation_matrix,
                                    modulation_spectrum, refine_path, resolve_target, static_path,
                                    unitary_log)
from analogctl.generators import gell_mann_basis, pauli_basis

from conftest import random_euler_path, smooth_random_path

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)
angles = st.floats(-10, 10, allow_nan=False)


def _eps_oracle(U, S):
    m = len(S)
    return np.array([[0.5 * np.trace(U.conj().T @ S[j] @ U @ S[k]) for k in range(m)]
                     for j in range(m)])


# ------------------------------------------------------------------ Euler
def test_euler_identity_and_half_turn():
    assert np.allclose(euler_unitary([0, 0, 0]), np.eye(2))
    assert np.allclose(euler_unitary([0, np.pi, 0]), [[0, -1], [1, 0]], atol=1e-15)


def test_euler_matches_matrix_exponentials():
    f = (np.pi / 2, np.pi / 2, np.pi / 2)
    oracle = expm(-0.5j * f[2] * SZ) @ expm(-0.5j * f[1] * SY) @ expm(-0.5j * f[0] * SZ)
    assert np.allclose(euler_unitary(f), oracle, atol=1e-14)


def test_euler_analytic_derivatives_match_differences():
    rng = np.random.default_rng(1)
    f = rng.normal(size=(5, 3))
    dU = EulerChart().derivatives(f)
    h = 1e-6
    for l in range(3):
        e = np.zeros(3)
        e[l] = h
        fd = (euler_unitary(f + e) - euler_unitary(f - e)) / (2 * h)
        assert np.allclose(dU[:, l], fd, atol=1e-9)


def test_euler_inverse_round_trip():
    path = random_euler_path(3, 200)
    f_back = EulerChart().from_unitaries(path.unitaries)
    U_back = euler_unitary(f_back)
    assert max(gate_distance(a, b) for a, b in zip(U_back, path.unitaries)) < 1e-10
    # continuous even where the polar angle passes through pi
    assert np.ptp(path.f_values[:, 1]) > np.pi
    assert np.max(np.abs(np.diff(f_back, axis=0))) < 0.2


# ---------------------------------------------------------- modulation matrix
def test_modulation_matrix_identity():
    path = static_path(16)
    assert np.array_equal(modulation_matrix(path, 0.5), np.eye(3))


def test_modulation_matrix_z_rotation():
    theta = 0.7
    t = np.linspace(0, 1, 9)
    f = np.zeros((9, 3))
    f[:, 2] = theta * t
    path = ControlPath(pauli_basis(), t, f, EulerChart())
    eps = modulation_matrix(path, 1.0)
    oracle = _eps_oracle(expm(-0.5j * theta * SZ), [SX, SY, SZ]).real
    assert np.allclose(eps, oracle, atol=1e-14)
    c, s = np.cos(theta), np.sin(theta)
    assert np.allclose(eps[:2, :2], [[c, -s], [s, c]]) or np.allclose(eps[:2, :2], [[c, s], [-s, c]])
    assert np.allclose(eps[2], [0, 0, 1]) and np.allclose(eps[:, 2], [0, 0, 1])


@settings(max_examples=50, deadline=None)
@given(angles, angles, angles)
def test_modulation_matrix_orthogonal(a, b, c):
    U = euler_unitary([a, b, c])
    eps = _eps_oracle(U, pauli_basis().generators)
    assert np.max(np.abs(eps.imag)) < 1e-12
    path_eps = ControlPath(pauli_basis(), [0, 0.5, 1], [[0, 0, 0], [a, b, c], [a, b, c]],
                           EulerChart()).epsilon[1]
    assert np.allclose(path_eps, eps.real, atol=1e-12)
    assert np.max(np.abs(path_eps @ path_eps.T - np.eye(3))) < 1e-10
    assert np.linalg.det(path_eps) == pytest.approx(1.0, abs=1e-10)


def test_qutrit_modulation_matrix_orthogonal():
    rng = np.random.default_rng(5)
    basis = gell_mann_basis()
    t = np.linspace(0, 1, 11)
    f = np.outer(t, rng.normal(size=8))
    path = ControlPath(basis, t, f, ExponentialChart(basis))
    for eps in path.epsilon:
        assert np.max(np.abs(eps @ eps.T - np.eye(8))) < 1e-10
        assert np.linalg.det(eps) == pytest.approx(1.0, abs=1e-10)


# ------------------------------------------------------------- Hamiltonian
def test_hamiltonian_of_linear_z_rotation():
    wbar = 3.0
    t = np.linspace(0, 1, 65)
    f = np.zeros((65, 3))
    f[:, 2] = wbar * t
    path = ControlPath(pauli_basis(), t, f, EulerChart())
    H, omega = hamiltonian_extract(path)
    assert np.allclose(H, 0.5 * wbar * SZ, atol=1e-12)
    assert np.allclose(omega[:, 2], wbar / 2, atol=1e-12)
    H1, w1 = hamiltonian_extract(path, t[10])
    assert np.allclose(H1, H[10])


def test_constant_path_has_no_hamiltonian():
    t = np.linspace(0, 1, 17)
    path = ControlPath(pauli_basis(), t, np.tile([0.3, 0.4, 0.5], (17, 1)), EulerChart(),
                       euler_unitary([0.3, 0.4, 0.5]), check=False)
    H, _ = hamiltonian_extract(path)
    assert np.max(np.abs(H)) < 1e-14


def test_extracted_hamiltonian_hermitian():
    H, _ = hamiltonian_extract(random_euler_path(7, 256))
    assert np.max(np.abs(H - np.conj(np.swapaxes(H, 1, 2)))) < 1e-8


def test_coarse_grid_rejected():
    t = np.linspace(0, 1, 5)
    f = np.zeros((5, 3))
    f[:, 1] = 20 * t
    path = ControlPath(pauli_basis(), t, f, EulerChart(), check=False)
    with pytest.raises(ValueError, match="too coarse"):
        hamiltonian_extract(path)


def test_reintegration_reproduces_final_unitary():
    path = random_euler_path(11, 2048)
    H, _ = hamiltonian_extract(path)
    dt = np.diff(path.times)
    U = np.eye(2, dtype=complex)
    for k in range(path.n_t):
        U = expm(-0.5j * (H[k] + H[k + 1]) * dt[k]) @ U
    assert gate_distance(U, path.unitaries[-1]) < 1e-6
    U = np.eye(2, dtype=complex)
    for Hk, dk in zip(interval_hamiltonians(path), dt):
        U = expm(-1j * Hk * dk) @ U
    assert gate_distance(U, path.unitaries[-1]) < 1e-10


# ----------------------------------------------------------------- energies
def test_energy_es_zero_and_square_pulse():
    assert energy_es(static_path(32)) == 0
    T = 1e-3
    t = np.linspace(0, T, 33)
    path = ControlPath(pauli_basis(), t, (np.pi * t / T)[:, None], PulseTrainChart(["x"]))
    H, _ = hamiltonian_extract(path)
    assert np.allclose(H[5], np.pi / (2 * T) * SX)
    assert energy_es(path) == pytest.approx(np.pi**2 / (4 * T), rel=1e-12)
    assert energy_es(path) == pytest.approx(2.467e3, rel=1e-3)


def test_energy_e_cases():
    t = np.linspace(0, 2.0, 101)
    const = ControlPath(pauli_basis(), t, np.tile([0.1, 0.2, 0.3], (101, 1)), EulerChart(),
                        check=False)
    assert energy_e(const) == pytest.approx(0, abs=1e-25)
    v = np.array([0.5, -1.0, 2.0])
    lin = ControlPath(pauli_basis(), t, np.outer(t, v), EulerChart(), check=False)
    assert energy_e(lin) == pytest.approx(v @ v * 2.0, rel=1e-12)


def test_energy_e_converges_under_refinement():
    coarse, fine = smooth_random_path(2, 256), smooth_random_path(2, 512)
    assert abs(energy_e(coarse) - energy_e(fine)) < 1e-3 * energy_e(fine)


def test_geodesic_energies():
    path = geodesic_path("pi-gate", 256)
    assert energy_es(path) == pytest.approx(np.pi**2 / 4, rel=1e-10)
    assert energy_e(path) == pytest.approx(np.pi**2, rel=1e-10)


# ----------------------------------------------------------------- geodesics
def test_geodesic_identity_is_constant():
    path = geodesic_path("identity", 32)
    assert np.ptp(path.f_values, axis=0).max() == 0
    assert all(gate_distance(U, np.eye(2)) < 1e-14 for U in path.unitaries)


def test_geodesic_z_half_way():
    target = expm(-0.5j * np.pi * SZ)
    U = geodesic_unitaries(target, np.linspace(0, 1, 5))
    assert gate_distance(U[2], expm(-0.25j * np.pi * SZ)) < 1e-12


def test_geodesic_pi_gate_midpoint_matches_eigendecomposition():
    target = resolve_target("pi-gate")
    w, v = np.linalg.eig(target)
    half = v @ np.diag(np.exp(0.5 * np.log(w.astype(complex)))) @ np.linalg.inv(v)
    path = geodesic_path("pi-gate", 64)
    assert gate_distance(path.unitaries[32], half) < 1e-8
    f = geodesic_init("pi-gate", path)
    assert np.allclose(f, path.f_values)


def test_geodesic_qutrit():
    basis = gell_mann_basis()
    target = expm(-1j * 0.8 * basis.generators[5])
    path = geodesic_path(target, 32, d=3)
    assert gate_distance(path.unitaries[-1], target) < 1e-10
    assert gate_distance(path.unitaries[16], expm(-0.4j * basis.generators[5])) < 1e-10


def test_ambiguous_branch_rejected():
    with pytest.raises(ValueError, match="ambiguous"):
        geodesic_unitaries(np.diag([1, 1, -1, -1]).astype(complex), np.linspace(0, 1, 3), 4)


def test_boundary_violations_detected():
    t = np.linspace(0, 1, 9)
    with pytest.raises(ValueError, match="start"):
        ControlPath(pauli_basis(), t, np.ones((9, 3)), EulerChart())
    with pytest.raises(ValueError, match="target"):
        ControlPath(pauli_basis(), t, np.zeros((9, 3)), EulerChart(), "pi-gate")


def test_resolve_target_names_and_validation():
    assert gate_distance(resolve_target("x"), SX) < 1e-15
    assert gate_distance(resolve_target("pi-gate"), SX) < 1e-15
    with pytest.raises(ValueError):
        resolve_target(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        resolve_target("hadamard")


def test_unitary_log_inverts_exponential():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    K = 0.3 * (A + A.conj().T)
    assert np.allclose(unitary_log(expm(-1j * K)), K, atol=1e-10)


def test_refine_path_keeps_unitaries():
    path = geodesic_path("pi-gate", 16)
    fine = refine_path(path, 1 / 64)
    assert fine.n_t == 64
    assert np.allclose(fine.unitaries[::4], path.unitaries)
    assert refine_path(path, 1.0) is path


# ------------------------------------------------------- modulation spectrum
def test_static_spectrum_is_sinc_squared():
    path = static_path(512)
    omega = np.linspace(0.05, 40, 200)
    spec = modulation_spectrum(path, omega)
    oracle = 2 / (np.pi * omega**2) * np.sin(omega / 2) ** 2
    # trapezoid error on the path grid is O((omega dt)^2)
    assert np.allclose(spec.diagonal(), oracle[:, None], rtol=2e-3, atol=1e-7)


def test_spectrum_hermitian_psd():
    spec = modulation_spectrum(smooth_random_path(1), np.linspace(0, 60, 300))
    F = spec.F
    assert np.allclose(F, np.conj(np.swapaxes(F, 1, 2)))
    assert np.linalg.eigvalsh(F).min() > -1e-10


@pytest.mark.parametrize("path", [static_path(256), smooth_random_path(3, 256)],
                         ids=["static", "random"])
def test_parseval_sum(path):
    omega = np.linspace(0, 600, 60001)
    tr = modulation_spectrum(path, omega).trace()
    assert np.trapezoid(tr, omega) == pytest.approx(1.5, rel=1e-2)
