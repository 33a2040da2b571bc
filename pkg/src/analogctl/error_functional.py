"""
Decoherence kernel and the averaged gate error.

The kernel ``R(t1, t2) = eps^T(t1) Phi(t1 - t2) eps(t2)`` combines a control
path with bath correlations.  Averaged over initial states, the first-order
gate error is

    error = (2 kappa / d) int_0^t int_0^t Tr R(t1, t2) dt1 dt2,
    kappa = 1 - 1 / (d + 1),

and equals the spectral overlap

    error = (4 t kappa / d) int_0^W Tr[G_re(omega) F_t(omega)] d omega.

Both integrals use the same trapezoid rules (path grid in time, bath grid in
frequency), so the two forms agree to roundoff up to the bath
interpolation error on non-uniform grids.

Subspace calculations (:class:`SubspaceWeights`) put the ``2 kappa / d``
prefactor inside the weight matrix ``Gamma``; the plain gate error keeps it
outside.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .baths import BathModel
from .control_path import ControlPath, modulation_spectrum
from .generators import GeneratorBasis

__all__ = [
    "kappa",
    "DecoherenceKernel",
    "kernel",
    "gate_error_time",
    "gate_error_spectral",
    "spectral_tail_bound",
    "SubspaceWeights",
    "subspace_weights",
    "subspace_error",
    "subspace_error_spectral",
    "NoiseModel",
    "white_control_noise",
    "noise_kernel",
    "WEAK_COUPLING_LIMIT",
]

WEAK_COUPLING_LIMIT = 0.1


def kappa(d: int) -> float:
    # d / (d + 1) == 1 - 1 / (d + 1), exact in floating point for d = 2
    return d / (d + 1)


@dataclass(frozen=True)
class _Source:
    """One additive correlation contribution restricted to its active axes.

    ``phi`` has shape ``(n, n, k)`` if ``diagonal`` else ``(n, n, k, k)``;
    ``full`` evaluates the complete ``m x m`` correlation at ``(t1, t2)``.
    """

    phi: np.ndarray
    axes: tuple
    diagonal: bool
    full: Callable


class DecoherenceKernel:
    """Two-time decoherence kernel of a path, as a sum of correlation sources.

    Grid quantities are computed on the path grid and integrated with its
    trapezoid weights.  The full ``(n, n, m, m)`` tensor is only built on
    request (:meth:`grid_tensor`); error integrals contract it on the fly.
    """

    def __init__(self, path: ControlPath, sources=()):
        self.path = path
        self.sources = tuple(sources)

    @property
    def n_axes(self) -> int:
        return self.path.basis.n_axes

    def __add__(self, other: "DecoherenceKernel") -> "DecoherenceKernel":
        if other.path is not self.path and not np.array_equal(other.path.times, self.path.times):
            raise ValueError("kernels must share the path grid")
        return DecoherenceKernel(self.path, self.sources + other.sources)

    def correlation_at(self, t1, t2) -> np.ndarray:
        """Total correlation matrix ``Phi(t1, t2)`` from all sources."""
        m = self.n_axes
        out = np.zeros(np.broadcast(np.asarray(t1), np.asarray(t2)).shape + (m, m), dtype=complex)
        for s in self.sources:
            out = out + s.full(t1, t2)
        return out

    def __call__(self, t1, t2) -> np.ndarray:
        """``R(t1, t2)`` at arbitrary times (broadcasting)."""
        t1, t2 = np.broadcast_arrays(np.asarray(t1, float), np.asarray(t2, float))
        e1 = self.path.epsilon_at(t1)
        e2 = self.path.epsilon_at(t2)
        phi = self.correlation_at(t1, t2)
        return np.einsum("...ji,...jk,...kl->...il", e1, phi, e2)

    def grid_tensor(self) -> np.ndarray:
        """``R`` on all grid pairs, shape ``(n, n, m, m)``.  Memory heavy."""
        eps = self.path.epsilon
        n, m = eps.shape[0], eps.shape[1]
        out = np.zeros((n, n, m, m), dtype=complex)
        for s in self.sources:
            ax = list(s.axes)
            x = eps[:, ax, :]
            if s.diagonal:
                out += np.einsum("aji,abj,bjl->abil", x, s.phi, x)
            else:
                out += np.einsum("aji,abjk,bkl->abil", x, s.phi, x)
        return out

    def contract(self, gamma=None) -> np.ndarray:
        """``M(t_a) = sum_b w_b Phi(t_a, t_b) eps(t_b) Gamma``, shape ``(n, m, m)``.

        ``Gamma`` defaults to the identity.  The double integral of
        ``Tr[R Gamma]`` is ``sum_a w_a sum_ji eps_ji(t_a) M_ji(t_a)`` and the
        same ``M`` drives the optimizer gradient.
        """
        eps = self.path.epsilon
        w = self.path.weights
        n, m = eps.shape[0], eps.shape[1]
        Y = eps.astype(complex) if gamma is None else eps @ np.asarray(gamma, dtype=complex)
        Y = Y * w[:, None, None]
        M = np.zeros((n, m, m), dtype=complex)
        for s in self.sources:
            ax = list(s.axes)
            if s.diagonal:
                for i, j in enumerate(ax):
                    M[:, j, :] += s.phi[:, :, i] @ Y[:, j, :]
            else:
                M[:, ax, :] += np.einsum("abjk,bkl->ajl", s.phi, Y[:, ax, :])
        return M

    def double_integral(self, gamma=None) -> complex:
        """``int int Tr[R(t1, t2) Gamma] dt1 dt2`` on the path grid."""
        M = self.contract(gamma)
        return complex(np.einsum("a,aji,aji->", self.path.weights, self.path.epsilon, M))

    def trace_matrix(self, gamma=None) -> np.ndarray:
        """``Tr[R(t_a, t_b) Gamma]`` on all grid pairs, shape ``(n, n)``."""
        eps = self.path.epsilon
        Y = eps.astype(complex) if gamma is None else eps @ np.asarray(gamma, dtype=complex)
        n = eps.shape[0]
        out = np.zeros((n, n), dtype=complex)
        for s in self.sources:
            ax = list(s.axes)
            if s.diagonal:
                out += np.einsum("abj,aji,bji->ab", s.phi, eps[:, ax, :], Y[:, ax, :])
            else:
                out += np.einsum("abjk,aji,bki->ab", s.phi, eps[:, ax, :], Y[:, ax, :])
        return out


def kernel(path: ControlPath, bath: BathModel) -> DecoherenceKernel:
    """Decoherence kernel of ``path`` in ``bath``.

    Raises
    ------
    ValueError
        If the bath axis count differs from the path's generator count.
    """
    if bath.n_axes != path.basis.n_axes:
        raise ValueError(
            f"bath has {bath.n_axes} axes but the path basis has {path.basis.n_axes}")
    axes = bath.active_axes
    if not axes:
        return DecoherenceKernel(path, ())
    phi = bath.correlation_grid(path.times, axes)

    def full(t1, t2, _bath=bath):
        return _bath.correlation(np.asarray(t1) - np.asarray(t2))

    return DecoherenceKernel(path, [_Source(phi, axes, bath.is_diagonal, full)])


def _warn_weak(value, what):
    if value > WEAK_COUPLING_LIMIT:
        warnings.warn(f"{what} = {value:.3g} exceeds {WEAK_COUPLING_LIMIT}; "
                      "the first-order error model is unreliable here", RuntimeWarning,
                      stacklevel=3)


def gate_error_time(kern: DecoherenceKernel, d: int | None = None) -> float:
    """State-averaged gate error from the time-domain double integral.

    ``(2 kappa / d) int int Tr R`` over the full square ``[0, t]^2``.
    """
    d = kern.path.d if d is None else d
    val = 2 * kappa(d) / d * kern.double_integral().real
    _warn_weak(val, "gate error")
    return float(val)


def _spectral_grid(path: ControlPath, bath: BathModel):
    if bath.max_lag < path.t_gate:
        raise ValueError(
            f"frequency resolution {bath.d_omega:.3g} too coarse for gate time {path.t_gate:g}; "
            "increase n_omega")
    return bath.omega, bath.omega_weights


def gate_error_spectral(path: ControlPath, bath: BathModel, d: int | None = None) -> float:
    """Gate error as the overlap of the bath and modulation spectra.

    ``(4 t kappa / d) int_0^W Re Tr[G_re(omega) F_t(omega)] d omega`` on the
    bath's frequency grid.
    """
    d = path.d if d is None else d
    omega, w = _spectral_grid(path, bath)
    g_re, _, _ = bath.spectrum_matrices(omega)
    spec = modulation_spectrum(path, omega)
    overlap = np.einsum("w,wjk,wkj->", w, g_re, spec.F).real
    val = 4 * path.t_gate * kappa(d) / d * overlap
    _warn_weak(val, "gate error")
    return float(val)


def spectral_tail_bound(path: ControlPath, bath: BathModel, d: int | None = None,
                        factor: float = 8.0) -> float:
    """Bound on the overlap beyond the quadrature cutoff ``W``.

    ``(4 t kappa / d) * sup_{W < omega < factor W} |G| * int_W^inf Tr F``,
    with the filter tail taken from the Parseval sum ``int_0^inf Tr F = m/2``.
    """
    d = path.d if d is None else d
    omega, w = _spectral_grid(path, bath)
    spec = modulation_spectrum(path, omega)
    captured = float(np.sum(w * spec.trace()))
    tail_f = max(path.basis.n_axes / 2 - captured, 0.0)
    beyond = np.linspace(bath.omega_max, factor * bath.omega_max, 512)
    g_sup = float(np.max(np.abs(bath.spectral_matrix(beyond)))) if bath.active_axes else 0.0
    return 4 * path.t_gate * kappa(d) / d * g_sup * tail_f


# -------------------------------------------------------------- subspaces
@dataclass(frozen=True)
class SubspaceWeights:
    """Weights turning the kernel trace into subspace error and leakage.

    Attributes
    ----------
    gamma : ndarray (m, m)
        Weight for the total deviation, prefactor ``2 kappa / d`` included.
    gamma_leak : ndarray (m, m)
        Weight for the population left outside the subspace.
    projector : ndarray (N, N)
    d : int
        Rank of the projector (subspace dimension).
    N : int
        Full dimension.
    """

    gamma: np.ndarray
    gamma_leak: np.ndarray
    projector: np.ndarray
    d: int
    N: int


def subspace_weights(basis: GeneratorBasis, projector=None) -> SubspaceWeights:
    """Weights for states averaged over the range of ``projector``.

    ``Gamma_ik = Tr(S_i P S_k)/d - [Tr(S_i P S_k P) + Tr(S_i P) Tr(S_k P)] / (d (d + 1))``
    and ``Gamma_L_ik = Tr(S_i P S_k Q) / d`` with ``Q = I - P``.

    Raises
    ------
    ValueError
        If ``projector`` is not a Hermitian idempotent of rank at least 1.
    """
    N = basis.d
    P = np.eye(N, dtype=complex) if projector is None else np.asarray(projector, dtype=complex)
    if P.shape != (N, N):
        raise ValueError(f"projector must be {N}x{N}")
    if np.max(np.abs(P - P.conj().T)) > 1e-10 or np.max(np.abs(P @ P - P)) > 1e-10:
        raise ValueError("projector must be Hermitian and idempotent")
    d = int(round(np.trace(P).real))
    if d < 1:
        raise ValueError("projector has rank zero")
    Q = np.eye(N) - P
    S = basis.generators
    SP = S @ P
    tr_sp = np.einsum("iaa->i", SP)
    tr_spsk = np.einsum("iab,kba->ik", SP, S)
    tr_spskp = np.einsum("iab,kba->ik", SP, SP)
    gamma = tr_spsk / d - (tr_spskp + np.outer(tr_sp, tr_sp)) / (d * (d + 1))
    gamma_leak = np.einsum("iab,kbc,ca->ik", SP, S, Q) / d
    return SubspaceWeights(gamma, gamma_leak, P, d, N)


def subspace_error(kern: DecoherenceKernel, weights: SubspaceWeights):
    """Total deviation and leakage population for subspace-averaged states.

    Returns
    -------
    total : float
        ``int int Tr[R Gamma]`` (prefactor inside ``Gamma``).
    leakage : float
        ``int int Tr[R Gamma_L]``.
    """
    if weights.gamma.shape[0] != kern.n_axes:
        raise ValueError("weights do not match the kernel dimension")
    total = kern.double_integral(weights.gamma).real
    leak = kern.double_integral(weights.gamma_leak).real
    _warn_weak(total, "subspace error")
    return float(total), float(leak)


def subspace_error_spectral(path: ControlPath, bath: BathModel, weights: SubspaceWeights,
                            form: str = "total") -> float:
    """Subspace error from the bath and weighted modulation spectra.

    ``form="total"`` integrates ``t Tr[G_tot F^Gamma]`` over the whole real
    line, using ``eps_t(-omega) = conj(eps_t(omega))`` for negative
    frequencies.  ``form="split"`` uses the equivalent positive-frequency
    expression ``2 t int_0^W Re Tr[eps_t^dag G_re eps_t Re Gamma
    - eps_t^dag G_im eps_t Im Gamma] / t``.
    """
    omega, w = _spectral_grid(path, bath)
    spec = modulation_spectrum(path, omega)
    gamma = weights.gamma
    if form == "total":
        g_pos = bath.spectral_matrix(omega)
        g_neg = bath.spectral_matrix(-omega)
        f_pos = spec.weighted(gamma)
        f_neg = np.einsum("wjk,kl,wml->wjm", spec.eps_t.conj(), gamma, spec.eps_t) / path.t_gate
        val = np.einsum("w,wjk,wkj->", w, g_pos, f_pos) + np.einsum("w,wjk,wkj->", w, g_neg, f_neg)
        return float(path.t_gate * val.real)
    if form == "split":
        g_re, g_im, _ = bath.spectrum_matrices(omega)
        e = spec.eps_t
        p_re = np.einsum("wji,wjk,wkl->wil", e.conj(), g_re, e)
        p_im = np.einsum("wji,wjk,wkl->wil", e.conj(), g_im, e)
        integrand = (np.einsum("wil,li->w", p_re, gamma.real)
                     - np.einsum("wil,li->w", p_im, gamma.imag))
        return float(2 * np.sum(w * integrand.real))
    raise ValueError(f"unknown form {form!r}")


# ------------------------------------------------------- modulation noise
class NoiseModel:
    """Correlations ``Phi_N(t1, t2)`` of classical noise on the control fields.

    Parameters
    ----------
    correlation : callable
        ``(t1, t2) -> array (..., m, m)``, real, broadcasting over times.
        Must satisfy ``Phi_N(t2, t1) = Phi_N(t1, t2)^T``.
    n_axes : int
    name : str
    """

    def __init__(self, correlation: Callable, n_axes: int, name: str = "noise"):
        self.correlation = correlation
        self.n_axes = n_axes
        self.name = name

    def grid(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        return np.asarray(self.correlation(t[:, None], t[None, :]), dtype=float)


def white_control_noise(sigma: float, width: float, n_axes: int) -> NoiseModel:
    """Delta-like noise of variance density ``sigma**2`` on every axis.

    The delta function is a unit-area Gaussian of standard deviation
    ``width``.
    """
    norm = 1.0 / (np.sqrt(2 * np.pi) * width)

    def corr(t1, t2):
        tau = np.asarray(t1, float) - np.asarray(t2, float)
        g = sigma**2 * norm * np.exp(-0.5 * (tau / width) ** 2)
        return g[..., None, None] * np.eye(n_axes)

    return NoiseModel(corr, n_axes, name="white_control")


def noise_kernel(noise: NoiseModel, path: ControlPath) -> DecoherenceKernel:
    """Kernel ``eps^T(t1) Phi_N(t1, t2) eps(t2)`` of modulation noise.

    Add it to a bath kernel with ``+`` to combine both contributions.

    Raises
    ------
    ValueError
        If ``Phi_N`` violates ``Phi_N(t2, t1) = Phi_N(t1, t2)^T`` on the grid
        or its size does not match the basis.
    """
    if noise.n_axes != path.basis.n_axes:
        raise ValueError("noise model axis count does not match the path basis")
    phi = noise.grid(path.times)
    swapped = np.transpose(phi, (1, 0, 3, 2))
    scale = max(float(np.max(np.abs(phi))), 1e-300)
    if np.max(np.abs(phi - swapped)) > 1e-12 * scale:
        raise ValueError("noise correlations are not symmetric under t1 <-> t2 with transposition")
    axes = tuple(range(noise.n_axes))

    def full(t1, t2, _noise=noise):
        return np.asarray(_noise.correlation(t1, t2), dtype=complex)

    return DecoherenceKernel(path, [_Source(phi.astype(complex), axes, False, full)])
