"""
Bloch-vector dynamics of a controlled qubit in a bath.

With ``I(t) = int_0^t R(t, t1) dt1`` the Bloch vector obeys

    dr/dt = L_minus r + L_plus (r - r0) = L r + b,
    L   = 4 Re[I^T - Tr(I) 1],         L_pm = (L +- L^T) / 2,
    b_j = 4 Im Tr[sigma_j I],          r0   = -L_plus^{-1} b,

where ``sigma_j`` are the adjoint (so(3)) generators.  The bath-induced
frequency shift is ``dw_j = 2 Re Tr[sigma_j I]``; it generates the
antisymmetric part, ``L_minus r = dw x r``.  Decay rates come out as
negative eigenvalues of ``L_plus``.

``I(t)`` is computed by composite Gauss-Legendre quadrature in the lag
``tau = t - t1``, on panels that grow geometrically away from ``tau = 0``
where the bath correlation is sharpest.  Correlations at the fixed panel
nodes are cached, so stepping ``t`` only costs the last, truncated panel.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baths import BathModel
from .control_path import ControlPath
from .generators import so_adjoint_generators

__all__ = [
    "BlochState",
    "BlochTrajectory",
    "BlochModel",
    "bloch_matrix",
    "drift_terms",
    "evolve_bloch",
]


@dataclass(frozen=True)
class BlochState:
    r: np.ndarray
    time: float


@dataclass(frozen=True)
class BlochTrajectory:
    times: np.ndarray
    r: np.ndarray

    @property
    def states(self):
        return [BlochState(r, float(t)) for t, r in zip(self.times, self.r)]

    @property
    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.r, axis=1)


class BlochModel:
    """Relaxation matrices of a qubit path in a bath on ``[0, t_max]``.

    Parameters
    ----------
    path : ControlPath
        Qubit path (``d = 2``).
    bath : BathModel
        Three-axis bath.
    t_max : float, optional
        Largest time that will be evaluated (default: the gate time).
    n_gauss : int
        Nodes per quadrature panel.
    first_panel : float, optional
        Width of the panel at ``tau = 0``; defaults to a fraction of the
        bath's shortest time scale ``pi / omega_max``.
    max_panel : float, optional
        Cap on panel widths; defaults to the path grid spacing times 4.
    """

    def __init__(self, path: ControlPath, bath: BathModel, t_max: float | None = None,
                 n_gauss: int = 16, first_panel: float | None = None,
                 max_panel: float | None = None):
        if path.d != 2:
            raise ValueError("Bloch analysis is defined for qubits (d = 2)")
        if bath.n_axes != 3:
            raise ValueError("bath must have three axes")
        self.path = path
        self.bath = bath
        self.t_max = path.t_gate if t_max is None else float(t_max)
        if self.t_max > path.t_gate * (1 + 1e-12):
            raise ValueError("t_max beyond the end of the path")
        self.sigma = so_adjoint_generators(path.basis)
        self._x, self._w = np.polynomial.legendre.leggauss(n_gauss)
        h0 = first_panel or min(np.pi / (8 * bath.omega_max), self.t_max / 64)
        hmax = max_panel or max(4 * np.min(np.diff(path.times)), h0)
        edges = [0.0]
        h = h0
        while edges[-1] < self.t_max:
            edges.append(edges[-1] + h)
            h = min(2 * h, hmax)
        self.edges = np.array(edges)
        self._axes = bath.active_axes
        self._pairs = bath.grid_pairs(self._axes)
        nodes, _ = self._panel_nodes(self.edges[:-1], self.edges[1:])
        self._phi_nodes = self._phi(nodes)

    def _panel_nodes(self, lo, hi):
        lo, hi = np.asarray(lo), np.asarray(hi)
        half = (hi - lo) / 2
        nodes = (lo + half)[:, None] + half[:, None] * self._x[None, :]
        return nodes, half[:, None] * self._w[None, :]

    def _phi(self, tau):
        """Full 3x3 correlation at lags ``tau``, shape ``tau.shape + (3, 3)``."""
        out = np.zeros(tau.shape + (3, 3), dtype=complex)
        if not self._axes:
            return out
        vals = self.bath.correlation_entries(tau, self._pairs)
        for i, (j, k) in enumerate(self._pairs):
            out[..., j, k] = vals[..., i]
        return out

    def integral(self, t: float) -> np.ndarray:
        """``int_0^t R(t, t1) dt1`` as a complex 3x3 matrix."""
        if t < 0 or t > self.t_max * (1 + 1e-12):
            raise ValueError(f"t = {t} outside [0, {self.t_max}]")
        if t == 0:
            return np.zeros((3, 3), dtype=complex)
        k = int(np.searchsorted(self.edges, t, side="right")) - 1
        full_nodes, full_w = self._panel_nodes(self.edges[:k], self.edges[1:k + 1])
        phi = self._phi_nodes[:k]
        last_nodes, last_w = self._panel_nodes([self.edges[k]], [t])
        tau = np.concatenate([full_nodes.ravel(), last_nodes.ravel()])
        w = np.concatenate([full_w.ravel(), last_w.ravel()])
        phi = np.concatenate([phi.reshape(-1, 3, 3), self._phi(last_nodes.ravel())])
        t1 = np.clip(t - tau, 0.0, None)
        eps1 = self.path.epsilon_at(t1)
        eps_t = self.path.epsilon_at(np.array([t]))[0]
        inner = np.einsum("n,njk,nkl->jl", w, phi, eps1)
        return eps_t.T @ inner

    def matrices(self, t: float):
        """``(L, L_plus, L_minus)`` at time ``t``."""
        I = self.integral(t)
        L = 4 * np.real(I.T - np.trace(I) * np.eye(3))
        return L, (L + L.T) / 2, (L - L.T) / 2

    def drift(self, t: float):
        """``(b, r0, dw)``; ``r0`` is None when ``L_plus`` is singular."""
        I = self.integral(t)
        L = 4 * np.real(I.T - np.trace(I) * np.eye(3))
        Lp = (L + L.T) / 2
        tr = np.einsum("jik,ki->j", self.sigma, I)
        b = 4 * tr.imag
        dw = 2 * tr.real
        r0 = None
        if np.linalg.cond(Lp) < 1e12:
            r0 = -np.linalg.solve(Lp, b)
        return b, r0, dw

    def _rhs(self, t, r):
        I = self.integral(t)
        L = 4 * np.real(I.T - np.trace(I) * np.eye(3))
        b = 4 * np.einsum("jik,ki->j", self.sigma, I).imag
        return L @ r + b

    def evolve(self, r_init, t_final: float | None = None, n_steps: int = 200) -> BlochTrajectory:
        """Fixed-step classical Runge-Kutta integration of the Bloch equation.

        Raises
        ------
        FloatingPointError
            If the state becomes non-finite (step size too large).
        """
        t_final = self.t_max if t_final is None else float(t_final)
        if n_steps < 1:
            raise ValueError("n_steps must be positive")
        times = np.linspace(0.0, t_final, n_steps + 1)
        r = np.empty((n_steps + 1, 3))
        r[0] = np.asarray(r_init, dtype=float)
        h = times[1] - times[0]
        for i in range(n_steps):
            t, y = times[i], r[i]
            k1 = self._rhs(t, y)
            k2 = self._rhs(t + h / 2, y + h / 2 * k1)
            k3 = self._rhs(t + h / 2, y + h / 2 * k2)
            k4 = self._rhs(t + h, y + h * k3)
            r[i + 1] = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(r[i + 1])):
                raise FloatingPointError(f"Bloch integration blew up at t = {times[i + 1]:.4g}")
        return BlochTrajectory(times, r)


def bloch_matrix(path: ControlPath, bath: BathModel, t: float, **kw):
    """Relaxation matrix ``L`` and its symmetric / antisymmetric parts at ``t``."""
    return BlochModel(path, bath, t_max=t, **kw).matrices(t)


def drift_terms(path: ControlPath, bath: BathModel, t: float, **kw):
    """Drive ``b``, quasi-steady state ``r0`` (None if undefined) and shift ``dw``."""
    return BlochModel(path, bath, t_max=t, **kw).drift(t)


def evolve_bloch(path: ControlPath, bath: BathModel, r_init, t_final: float | None = None,
                 n_steps: int = 200, **kw) -> BlochTrajectory:
    """Bloch trajectory from ``r_init`` over ``[0, t_final]``."""
    t_final = path.t_gate if t_final is None else t_final
    return BlochModel(path, bath, t_max=t_final, **kw).evolve(r_init, t_final, n_steps)
