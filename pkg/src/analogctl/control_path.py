"""
Parametrized unitary trajectories and the quantities derived from them.

A :class:`ControlPath` stores the parameter vector ``f(t)`` on a time grid
together with a *chart*, the rule ``(f, t) -> U`` that turns parameters into
a propagator.  The propagator is never obtained by integrating a
time-ordered exponential; the physical control Hamiltonian is recovered
afterwards from ``H = i dU/dt U^dagger``.

Everything that depends on the path is derived from the unitaries:

* the modulation matrix ``eps_jk(t) = Tr[U^dag S_j U S_k] / 2`` (adjoint
  action, real orthogonal),
* the control Hamiltonian and its generator coefficients ``omega_j``,
* the energies ``E_S = int Tr[H^2]/d dt`` and ``E = int |df/dt|^2 dt``,
* the finite-time modulation spectrum ``F_t(omega)``.

Global phases are unobservable and quotiented out wherever two unitaries are
compared.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg as sla

from .generators import GeneratorBasis, basis_for_dimension, expansion_coefficients, pauli_basis

__all__ = [
    "Chart",
    "EulerChart",
    "ExponentialChart",
    "EmbeddedChart",
    "PulseTrainChart",
    "ControlPath",
    "ModulationSpectrum",
    "euler_unitary",
    "resolve_target",
    "gate_distance",
    "unitary_log",
    "trapezoid_weights",
    "modulation_matrix",
    "modulation_matrices",
    "hamiltonian_extract",
    "interval_hamiltonians",
    "energy_es",
    "energy_e",
    "geodesic_unitaries",
    "geodesic_init",
    "geodesic_path",
    "static_path",
    "refine_path",
    "modulation_spectrum",
]

BOUNDARY_TOL = 1e-8

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI = {"x": _SX, "y": _SY, "z": _SZ}


# ---------------------------------------------------------------- utilities
def trapezoid_weights(times) -> np.ndarray:
    """Composite trapezoid weights on an arbitrary increasing grid."""
    t = np.asarray(times, dtype=float)
    w = np.zeros_like(t)
    dt = np.diff(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def gate_distance(U, V) -> float:
    """Phase-insensitive distance ``min_phi max|U - e^{i phi} V|``.

    The optimal phase is taken from ``Tr(V^dag U)``, which is exact for
    nearby unitaries and an upper bound otherwise.
    """
    U = np.asarray(U)
    V = np.asarray(V)
    ov = np.trace(V.conj().T @ U)
    phase = ov / abs(ov) if abs(ov) > 1e-300 else 1.0
    return float(np.max(np.abs(U - phase * V)))


def unitary_log(W) -> np.ndarray:
    """Hermitian ``K`` with ``W = exp(-i K)``, eigenphases in ``(-pi, pi]``.

    Works on stacks of matrices.  A batched eigendecomposition is used when
    it returns an orthonormal eigenbasis; degenerate cases fall back to the
    complex Schur form, which is diagonal for normal matrices.
    """
    W = np.asarray(W, dtype=complex)
    shape = W.shape
    W = W.reshape((-1,) + shape[-2:])
    vals, vecs = np.linalg.eig(W)
    gram = np.einsum("nai,naj->nij", vecs.conj(), vecs)
    bad = np.max(np.abs(gram - np.eye(shape[-1])), axis=(1, 2)) > 1e-9
    phases = np.angle(vals)
    K = np.einsum("nai,ni,nbi->nab", vecs, -phases, vecs.conj())
    for i in np.flatnonzero(bad):
        T, Z = sla.schur(W[i], output="complex")
        K[i] = (Z * -np.angle(np.diag(T))) @ Z.conj().T
    K = (K + np.swapaxes(K.conj(), -1, -2)) / 2
    return K.reshape(shape)


def _eigenphases(K) -> np.ndarray:
    return np.linalg.eigvalsh(K)


def resolve_target(target, d: int = 2) -> np.ndarray:
    """Turn a gate name or matrix into a ``d x d`` unitary.

    Names: ``identity``, ``pi-gate`` (a pi rotation about x, the X gate),
    ``x``, ``y``, ``z`` (pi rotations about that axis, qubits only).
    """
    if isinstance(target, str):
        name = target.lower()
        if name in ("identity", "id", "i"):
            return np.eye(d, dtype=complex)
        if d != 2:
            raise ValueError(f"named gate {target!r} is only defined for qubits")
        if name in ("pi-gate", "pi", "x"):
            return -1j * _SX
        if name in ("y", "z"):
            return -1j * _PAULI[name]
        raise ValueError(f"unknown gate name {target!r}")
    U = np.asarray(target, dtype=complex)
    if U.shape != (d, d):
        raise ValueError(f"target must be a {d}x{d} matrix")
    if np.max(np.abs(U.conj().T @ U - np.eye(d))) > 1e-10:
        raise ValueError("target is not unitary")
    return U


# -------------------------------------------------------------------- charts
class Chart:
    """Rule mapping a parameter vector ``f`` and a time ``t`` to a unitary.

    Subclasses implement :meth:`unitaries`; :meth:`derivatives` (analytic
    ``dU/df_l``) and :meth:`from_unitaries` (an inverse used to build paths
    from prescribed unitaries) are optional.
    """

    d: int
    n_params: int

    def unitaries(self, f, t) -> np.ndarray:
        raise NotImplementedError

    def derivatives(self, f, t):
        return None

    def from_unitaries(self, U, t) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no inverse")

    def describe(self) -> dict:
        return {"chart": type(self).__name__}


def _rz(a):
    a = np.asarray(a, dtype=float)
    out = np.zeros(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * a)
    out[..., 1, 1] = np.exp(0.5j * a)
    return out


def _ry(b):
    b = np.asarray(b, dtype=float)
    c, s = np.cos(b / 2), np.sin(b / 2)
    out = np.empty(b.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def euler_unitary(f) -> np.ndarray:
    """``exp(-i f3 sz/2) exp(-i f2 sy/2) exp(-i f1 sz/2)``; broadcasts over ``f[..., 3]``."""
    f = np.asarray(f, dtype=float)
    return _rz(f[..., 2]) @ _ry(f[..., 1]) @ _rz(f[..., 0])


class EulerChart(Chart):
    """Three Euler angles ``(f1, f2, f3)`` for a qubit, see :func:`euler_unitary`.

    The chart is degenerate where ``f2`` is a multiple of ``2 pi``: only
    ``f1 + f3`` (or ``f3 - f1``) is then defined.
    """

    d = 2
    n_params = 3

    def unitaries(self, f, t=None):
        return euler_unitary(f)

    def derivatives(self, f, t=None):
        f = np.asarray(f, dtype=float)
        a, b, c = _rz(f[..., 0]), _ry(f[..., 1]), _rz(f[..., 2])
        hz, hy = -0.5j * _SZ, -0.5j * _SY
        U = c @ b @ a
        return np.stack([U @ hz, c @ (hy @ b) @ a, hz @ U], axis=-3)

    def from_unitaries(self, U, t=None):
        """Euler angles of a continuous stack of unitaries (up to global phase).

        Each point is decomposed on the principal branch ``f2 in [0, pi]``
        and then moved to the equivalent angle triple closest to its
        predecessor.  Up to a global phase the triples are equivalent under
        ``f_l -> f_l + 2 pi`` for each angle and under
        ``(f1, f2, f3) -> (f1 + pi, -f2, f3 + pi)``.  At degenerate points only
        ``f1 + f3`` (or ``f3 - f1``) is defined; the other combination is
        taken from the nearest well-defined point.
        """
        U = np.asarray(U, dtype=complex)
        single = U.ndim == 2
        if single:
            U = U[None]
        U = U / np.sqrt(np.linalg.det(U))[..., None, None]
        u00, u10 = U[:, 0, 0], U[:, 1, 0]
        f2 = 2 * np.arctan2(np.abs(u10), np.abs(u00))
        total = _fill_degenerate(-2 * np.angle(u00), np.abs(u00) > 1e-12)
        diff = _fill_degenerate(2 * np.angle(u10), np.abs(u10) > 1e-12)
        out = np.stack([(total - diff) / 2, f2, (total + diff) / 2], axis=-1)
        flipped = out + [np.pi, 0, np.pi]
        flipped[:, 1] *= -1
        for k in range(1, len(out)):
            ref = out[k - 1]
            best = None
            for c in (out[k], flipped[k]):
                c = c + 2 * np.pi * np.round((ref - c) / (2 * np.pi))
                dist = np.sum((c - ref) ** 2)
                if best is None or dist < best[0]:
                    best = (dist, c)
            out[k] = best[1]
        return out[0] if single else out


def _fill_degenerate(values, defined):
    values = np.array(values, dtype=float)
    if not np.any(defined):
        return np.zeros_like(values)
    idx = np.flatnonzero(defined)
    pos = np.arange(values.size)
    nearest = idx[np.clip(np.searchsorted(idx, pos), 0, idx.size - 1)]
    left = idx[np.clip(np.searchsorted(idx, pos) - 1, 0, idx.size - 1)]
    pick = np.where(np.abs(left - pos) <= np.abs(nearest - pos), left, nearest)
    return values[pick]


class ExponentialChart(Chart):
    """``U = exp(-i sum_j f_j S_j)`` over a full generator basis (any ``d``)."""

    def __init__(self, basis: GeneratorBasis):
        self.basis = basis
        self.d = basis.d
        self.n_params = basis.n_axes

    def unitaries(self, f, t=None):
        f = np.asarray(f, dtype=float)
        H = np.einsum("...j,jab->...ab", f, self.basis.generators)
        w, v = np.linalg.eigh(H)
        return np.einsum("...ai,...i,...bi->...ab", v, np.exp(-1j * w), v.conj())

    def from_unitaries(self, U, t=None):
        U = np.asarray(U, dtype=complex)
        K = unitary_log(U)
        K = K - np.einsum("...aa->...", K)[..., None, None] * np.eye(self.d) / self.d
        return expansion_coefficients(self.basis, K)

    def describe(self):
        return {"chart": "ExponentialChart", "d": self.d}


def _embed(U2, d=3):
    out = np.zeros(U2.shape[:-2] + (d, d), dtype=complex)
    out[..., :2, :2] = U2
    return out


class EmbeddedChart(Chart):
    """Qubit chart placed on the ``|1>, |2>`` block of a qutrit.

    ``U3(t) = exp(-i t detune g8) . blockdiag(U2(f, t), 1)``, where ``g8`` is
    the eighth Gell-Mann matrix separating level ``|3>`` from the qubit.
    """

    d = 3

    def __init__(self, base: Chart, detune: float = 0.0):
        if base.d != 2:
            raise ValueError("base chart must act on a qubit")
        self.base = base
        self.detune = float(detune)
        self.n_params = base.n_params
        self._g8_diag = np.array([1.0, 1.0, -2.0]) / np.sqrt(3)

    def _phase(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * self.detune * t[..., None] * self._g8_diag)

    def unitaries(self, f, t):
        U3 = _embed(self.base.unitaries(f, t))
        U3[..., 2, 2] = 1.0
        return self._phase(t)[..., :, None] * U3

    def derivatives(self, f, t):
        dU = self.base.derivatives(f, t)
        if dU is None:
            return None
        return self._phase(t)[..., None, :, None] * _embed(dU)

    def from_unitaries(self, U, t):
        U = np.asarray(U, dtype=complex)
        U2 = np.conj(self._phase(t))[..., :, None] * U
        return self.base.from_unitaries(U2[..., :2, :2], t)

    def describe(self):
        return {"chart": "EmbeddedChart", "detune": self.detune, "base": self.base.describe()}


class PulseTrainChart(Chart):
    """Sequence of rotations, one parameter (rotation angle) per pulse.

    ``U = R_{a_K}(f_K) ... R_{a_1}(f_1)`` with ``R_a(x) = exp(-i x s_a / 2)``;
    later pulses act on the left.  Square pulses correspond to angles that
    ramp linearly from 0 to their final value across the pulse window.
    """

    d = 2

    def __init__(self, axes):
        axes = tuple(a.lower() for a in axes)
        for a in axes:
            if a not in _PAULI:
                raise ValueError(f"unknown pulse axis {a!r}")
        self.axes = axes
        self.n_params = len(axes)

    def unitaries(self, f, t=None):
        f = np.asarray(f, dtype=float)
        U = np.broadcast_to(np.eye(2, dtype=complex), f.shape[:-1] + (2, 2)).copy()
        for k, a in enumerate(self.axes):
            x = f[..., k]
            R = (np.cos(x / 2)[..., None, None] * np.eye(2)
                 - 1j * np.sin(x / 2)[..., None, None] * _PAULI[a])
            U = R @ U
        return U

    def describe(self):
        return {"chart": "PulseTrainChart", "axes": "".join(self.axes).upper()}


# ---------------------------------------------------------------- the path
class ControlPath:
    """Unitary trajectory ``U[f(t), t]`` sampled on a time grid.

    Parameters
    ----------
    basis : GeneratorBasis
        Generators defining the modulation matrix; ``basis.d`` must match the
        chart.
    times : array_like, shape (n + 1,)
        Strictly increasing grid from 0 to the gate time.
    f_values : array_like, shape (n + 1, n_params)
        Control parameters on the grid.
    chart : Chart
        Parameter-to-unitary rule.
    target : array_like or str, optional
        Gate the path must implement at the final time.  Defaults to the
        path's own final unitary.
    check : bool
        Verify ``U(0) = I`` and ``U(t) = target`` up to global phase.
    """

    def __init__(self, basis: GeneratorBasis, times, f_values, chart: Chart,
                 target=None, *, check: bool = True, name: str = "", meta: dict | None = None):
        times = np.asarray(times, dtype=float)
        f_values = np.array(f_values, dtype=float)
        if f_values.ndim == 1:
            f_values = f_values[:, None]
        if times.ndim != 1 or times.size < 3:
            raise ValueError("need at least 3 grid points")
        if abs(times[0]) > 0 or np.any(np.diff(times) <= 0):
            raise ValueError("grid must start at 0 and increase strictly")
        if f_values.shape != (times.size, chart.n_params):
            raise ValueError(
                f"f_values has shape {f_values.shape}, expected {(times.size, chart.n_params)}")
        if not np.all(np.isfinite(f_values)):
            raise ValueError("f_values must be finite")
        if basis.d != chart.d:
            raise ValueError(f"basis dimension {basis.d} does not match chart dimension {chart.d}")
        times.setflags(write=False)
        f_values.setflags(write=False)
        self.basis = basis
        self.times = times
        self.f_values = f_values
        self.chart = chart
        self.name = name
        self.meta = dict(meta or {})
        if target is None:
            self.target = self.unitaries[-1].copy()
        else:
            self.target = resolve_target(target, basis.d)
        if check:
            self.check_boundaries()

    # ------------------------------------------------------------- basics
    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def t_gate(self) -> float:
        return float(self.times[-1])

    @property
    def n_t(self) -> int:
        """Number of grid intervals."""
        return self.times.size - 1

    @property
    def n_params(self) -> int:
        return self.chart.n_params

    @cached_property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.times)

    @cached_property
    def unitaries(self) -> np.ndarray:
        U = self.chart.unitaries(self.f_values, self.times)
        U.setflags(write=False)
        return U

    @cached_property
    def epsilon(self) -> np.ndarray:
        """Modulation matrices on the grid, shape ``(n + 1, m, m)``."""
        eps = modulation_matrices(self.basis, self.unitaries)
        eps.setflags(write=False)
        return eps

    def with_f(self, f_values, *, check: bool = True, name: str | None = None) -> "ControlPath":
        return ControlPath(self.basis, self.times, f_values, self.chart, self.target,
                           check=check, name=self.name if name is None else name, meta=self.meta)

    def check_boundaries(self, tol: float = BOUNDARY_TOL):
        start = gate_distance(self.unitaries[0], np.eye(self.d))
        if start > tol:
            raise ValueError(f"path does not start at the identity (distance {start:.3g})")
        end = gate_distance(self.unitaries[-1], self.target)
        if end > tol:
            raise ValueError(f"path does not reach the target gate (distance {end:.3g})")

    def index_of(self, t1) -> int:
        """Grid index of time ``t1``; raises if ``t1`` is not a grid point."""
        i = int(np.argmin(np.abs(self.times - t1)))
        if abs(self.times[i] - t1) > 1e-12 * max(1.0, self.t_gate):
            raise ValueError(f"t = {t1} is not on the path grid")
        return i

    # -------------------------------------------------- off-grid evaluation
    def f_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        cols = [np.interp(t, self.times, self.f_values[:, l]) for l in range(self.n_params)]
        return np.stack(cols, axis=-1)

    def unitary_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.chart.unitaries(self.f_at(t), t)

    def epsilon_at(self, t) -> np.ndarray:
        return modulation_matrices(self.basis, self.unitary_at(t))

    # ----------------------------------------------------- parameter gradients
    def epsilon_derivatives(self, h: float = 1e-5, analytic: bool = True) -> np.ndarray:
        """``d eps / d f_l`` at every grid point, shape ``(n + 1, n_params, m, m)``.

        Uses the chart's analytic ``dU/df`` when available (and ``analytic``),
        otherwise central differences of step ``h``.
        """
        S = self.basis.generators
        dU = self.chart.derivatives(self.f_values, self.times) if analytic else None
        if dU is not None:
            U = self.unitaries
            # d eps_jk = Re Tr[U^dag S_j dU S_k]
            A = np.einsum("nba,jbc->njac", U.conj(), S)
            B = np.einsum("nlcd,kde->nlkce", dU, S)
            return np.einsum("njac,nlkca->nljk", A, B).real
        out = np.empty((self.times.size, self.n_params) + (S.shape[0],) * 2)
        for l in range(self.n_params):
            step = np.zeros(self.n_params)
            step[l] = h
            up = modulation_matrices(self.basis, self.chart.unitaries(self.f_values + step, self.times))
            dn = modulation_matrices(self.basis, self.chart.unitaries(self.f_values - step, self.times))
            out[:, l] = (up - dn) / (2 * h)
        return out

    def __repr__(self):
        return (f"ControlPath(name={self.name!r}, d={self.d}, n_t={self.n_t}, "
                f"n_params={self.n_params}, t_gate={self.t_gate:g})")


def modulation_matrices(basis: GeneratorBasis, U) -> np.ndarray:
    """``eps_jk = Tr[U^dag S_j U S_k] / 2`` for a stack of unitaries."""
    S = basis.generators
    U = np.asarray(U, dtype=complex)
    rot = np.einsum("...ba,jbc,...cd->...jad", U.conj(), S, U)
    return np.einsum("...jad,kda->...jk", rot, S).real / 2


def modulation_matrix(path: ControlPath, t1) -> np.ndarray:
    """Modulation matrix at grid time ``t1``."""
    return path.epsilon[path.index_of(t1)]


# ------------------------------------------------------------ Hamiltonians
def _traceless(K):
    d = K.shape[-1]
    return K - np.einsum("...aa->...", K)[..., None, None] * np.eye(d) / d


def _check_steps(K, what):
    phases = np.abs(np.linalg.eigvalsh(K))
    worst = float(np.max(phases)) if phases.size else 0.0
    if worst > np.pi / 2:
        raise ValueError(
            f"grid too coarse: {what} rotates by {worst:.3g} rad in one step (limit pi/2)")


def hamiltonian_extract(path: ControlPath, t1=None):
    """Control Hamiltonian ``H = i dU/dt U^dag`` and its coefficients ``omega_j``.

    The derivative is taken as the generator of the propagator between the
    two neighbouring grid points, ``H(t_k) = i log(U_{k+1} U_{k-1}^dag) /
    (t_{k+1} - t_{k-1})`` (one-sided at the ends), which is exactly
    Hermitian and second-order accurate on smooth paths.  The global-phase
    part is dropped.

    Returns
    -------
    H : ndarray
        ``(d, d)`` at ``t1``, or ``(n + 1, d, d)`` on the whole grid if
        ``t1`` is None.
    omega : ndarray
        ``omega_j = Tr[S_j H] / 2``, shape ``(m,)`` or ``(n + 1, m)``.

    Raises
    ------
    ValueError
        If a single grid step rotates by more than ``pi / 2``, where the
        finite-difference generator is no longer meaningful.
    """
    U = path.unitaries
    t = path.times
    hi = np.minimum(np.arange(t.size) + 1, t.size - 1)
    lo = np.maximum(np.arange(t.size) - 1, 0)
    if t1 is not None:
        i = path.index_of(t1)
        hi, lo = hi[i:i + 1], lo[i:i + 1]
    K = _traceless(unitary_log(U[hi] @ np.swapaxes(U[lo].conj(), -1, -2)))
    _check_steps(K, "the propagator between neighbouring grid points")
    H = K / (t[hi] - t[lo])[:, None, None]
    omega = expansion_coefficients(path.basis, H)
    if t1 is not None:
        return H[0], omega[0]
    return H, omega


def interval_hamiltonians(path: ControlPath) -> np.ndarray:
    """Constant Hamiltonians reproducing each grid step exactly.

    ``H_k = i log(U_{k+1} U_k^dag) / (t_{k+1} - t_k)``, shape ``(n, d, d)``,
    so that ``prod_k exp(-i H_k dt_k) = U(t)`` up to global phase.
    """
    U = path.unitaries
    K = _traceless(unitary_log(U[1:] @ np.swapaxes(U[:-1].conj(), -1, -2)))
    _check_steps(K, "a grid step")
    return K / np.diff(path.times)[:, None, None]


def energy_es(path: ControlPath) -> float:
    """Modulation energy ``E_S = int Tr[H_S^2] / d dt``.

    Uses the step Hamiltonians of :func:`interval_hamiltonians` (midpoint
    rule), which is exact for piecewise-constant controls such as square
    pulses.
    """
    H = interval_hamiltonians(path)
    tr = np.einsum("nab,nba->n", H, H).real / path.d
    return float(np.sum(tr * np.diff(path.times)))


def energy_e(path: ControlPath) -> float:
    """Parameter-speed energy ``E = int |df/dt|^2 dt`` (trapezoid rule)."""
    fdot = np.gradient(path.f_values, path.times, axis=0)
    return float(np.sum(path.weights * np.sum(fdot**2, axis=1)))


# ----------------------------------------------------------- geodesic paths
def _special_unitary_representative(U):
    """Global-phase representative of ``U`` in SU(d) with the smallest log.

    Inputs already in SU(d) are kept unless another representative has a
    strictly shorter logarithm (for example ``-I`` becomes ``I``).
    """
    d = U.shape[0]
    det = np.linalg.det(U)
    V = U if abs(det - 1) < 1e-12 else U / det ** (1.0 / d)
    best, best_norm = V, np.sum(np.abs(_eigenphases(unitary_log(V))))
    for k in range(1, d):
        W = V * np.exp(2j * np.pi * k / d)
        norm = np.sum(np.abs(_eigenphases(unitary_log(W))))
        if norm < best_norm - 1e-9:
            best, best_norm = W, norm
    return best


def geodesic_unitaries(target, times, d: int | None = None) -> np.ndarray:
    """Fractional powers ``U(t1) = target ** (t1 / t)`` on ``times``.

    The power uses the principal logarithm of the SU(d) representative of
    the target chosen by :func:`_special_unitary_representative`.

    Raises
    ------
    ValueError
        If an eigenphase of that representative sits exactly at ``+-pi``,
        where the principal branch is ambiguous.
    """
    if d is None:
        d = np.asarray(target).shape[0] if not isinstance(target, str) else 2
    V = _special_unitary_representative(resolve_target(target, d))
    K = unitary_log(V)
    if np.any(np.abs(np.abs(_eigenphases(K)) - np.pi) < 1e-10):
        raise ValueError("target has an eigenphase at +-pi; the fractional power is ambiguous")
    times = np.asarray(times, dtype=float)
    s = times / times[-1]
    w, v = np.linalg.eigh(K)
    return np.einsum("ai,ni,bi->nab", v, np.exp(-1j * np.outer(s, w)), v.conj())


def geodesic_init(target, template: ControlPath | None = None, *, times=None,
                  chart: Chart | None = None, basis: GeneratorBasis | None = None) -> np.ndarray:
    """Parameter grid whose path reproduces ``target ** (t1 / t)``.

    Either pass a template path (its grid, chart and basis are reused) or
    the pieces explicitly.
    """
    if template is not None:
        times, chart = template.times, template.chart
    if times is None or chart is None:
        raise ValueError("need a template path or both times and chart")
    U = geodesic_unitaries(target, times, chart.d)
    return chart.from_unitaries(U, np.asarray(times, dtype=float))


def _default_chart(d):
    if d == 2:
        return EulerChart()
    return ExponentialChart(basis_for_dimension(d))


def geodesic_path(target="identity", n_t: int = 256, t_gate: float = 1.0, *,
                  d: int = 2, chart: Chart | None = None,
                  basis: GeneratorBasis | None = None) -> ControlPath:
    """Geodesic path to ``target`` on a uniform grid of ``n_t`` intervals."""
    basis = basis or (pauli_basis() if d == 2 else basis_for_dimension(d))
    chart = chart or _default_chart(d)
    times = np.linspace(0.0, t_gate, n_t + 1)
    f = geodesic_init(target, times=times, chart=chart)
    return ControlPath(basis, times, f, chart, resolve_target(target, d), name="geodesic")


def refine_path(path: ControlPath, max_step: float) -> ControlPath:
    """Same path on a grid whose steps do not exceed ``max_step``.

    Every interval is split evenly and the parameters are interpolated
    linearly, which is exact for paths that are piecewise linear in ``f``
    (geodesics in the Euler chart, square pulses).
    """
    if not max_step > 0:
        raise ValueError("max_step must be positive")
    t = path.times
    parts = [t[:1]]
    for a, b in zip(t[:-1], t[1:]):
        k = max(1, int(np.ceil((b - a) / max_step - 1e-9)))
        parts.append(np.linspace(a, b, k + 1)[1:])
    times = np.concatenate(parts)
    if times.size == t.size:
        return path
    f = np.column_stack([np.interp(times, t, path.f_values[:, l]) for l in range(path.n_params)])
    return ControlPath(path.basis, times, f, path.chart, path.target, name=path.name,
                       meta=path.meta)


def static_path(n_t: int = 256, t_gate: float = 1.0, *, d: int = 2,
                chart: Chart | None = None) -> ControlPath:
    """Path with no control at all (``U = I`` throughout)."""
    basis = pauli_basis() if d == 2 else basis_for_dimension(d)
    chart = chart or _default_chart(d)
    times = np.linspace(0.0, t_gate, n_t + 1)
    return ControlPath(basis, times, np.zeros((times.size, chart.n_params)), chart,
                       "identity", name="static")


# -------------------------------------------------------- modulation spectrum
@dataclass(frozen=True)
class ModulationSpectrum:
    """Finite-time modulation spectrum of a path.

    Attributes
    ----------
    omega : ndarray, shape (n_w,)
    eps_t : ndarray, shape (n_w, m, m)
        ``(2 pi)^{-1/2} int_0^t e^{i omega tau} eps(tau) d tau``.
    F : ndarray, shape (n_w, m, m)
        ``eps_t eps_t^dag / t``, Hermitian positive semidefinite.
    t_gate : float
    """

    omega: np.ndarray
    eps_t: np.ndarray
    F: np.ndarray
    t_gate: float

    def diagonal(self) -> np.ndarray:
        """Diagonal entries ``F_jj(omega)``, shape ``(n_w, m)``."""
        return np.einsum("wjj->wj", self.F).real

    def trace(self) -> np.ndarray:
        return np.einsum("wjj->w", self.F).real

    def weighted(self, gamma) -> np.ndarray:
        """``eps_t Gamma eps_t^dag / t`` for a weight matrix ``Gamma``."""
        return np.einsum("wjk,kl,wml->wjm", self.eps_t, gamma, self.eps_t.conj()) / self.t_gate


def _fourier_eps(path: ControlPath, omega, sign=1.0):
    omega = np.asarray(omega, dtype=float)
    eps = path.epsilon.reshape(path.times.size, -1) * path.weights[:, None]
    out = np.empty((omega.size, eps.shape[1]), dtype=complex)
    chunk = max(1, 2**22 // path.times.size)
    for i in range(0, omega.size, chunk):
        ph = np.exp(sign * 1j * np.outer(omega[i:i + chunk], path.times))
        out[i:i + chunk] = ph @ eps
    m = path.basis.n_axes
    return out.reshape(omega.shape + (m, m)) / np.sqrt(2 * np.pi)


def modulation_spectrum(path: ControlPath, omega) -> ModulationSpectrum:
    """Modulation spectrum on ``omega`` by trapezoid quadrature on the path grid."""
    omega = np.asarray(omega, dtype=float)
    eps_t = _fourier_eps(path, omega)
    F = np.einsum("wjk,wlk->wjl", eps_t, eps_t.conj()) / path.t_gate
    return ModulationSpectrum(omega, eps_t, F, path.t_gate)
