"""
Bath coupling spectra and their correlation functions.

A :class:`BathModel` is defined in the frequency domain by its spectral matrix
``G_tot(omega)``, the Fourier transform of the full correlation matrix
``Phi(t) = <B_j(t) B_k>``.  It is Hermitian and positive semidefinite at every
frequency.  For *symmetric* baths (real, even ``Phi``) ``G_tot`` is real and
even and coincides with ``G(omega)``, the transform of ``Re Phi``.

The correlation function is obtained by trapezoid quadrature of

    Phi(t) = 1/(2 pi) * int_{-W}^{W} exp(-i omega t) G_tot(omega) d omega

on a uniform grid of ``n_omega`` points covering ``[0, W]`` (negative
frequencies are folded onto it).  Bath operators are never represented.

Units: the gate time sets the time unit, frequencies are in rad per time unit.
"""
from __future__ import annotations

import threading
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "BathModel",
    "correlation",
    "spectrum_matrices",
    "make_ohmic_cutoff",
    "make_lorentzian_dip",
    "make_one_over_omega",
    "make_white_noise",
    "make_zero_bath",
    "combine_baths",
    "builtin_bath",
    "BUILTIN_BATHS",
    "DEFAULT_N_OMEGA",
]

DEFAULT_N_OMEGA = 4096
DEFAULT_OMEGA_MAX = 50.0

Spectrum = Callable[[np.ndarray], np.ndarray]


class BathModel:
    """Stationary bath described by its spectral matrix.

    Parameters
    ----------
    spectra : sequence of callables or None
        Diagonal entries ``G_tot_jj(omega)`` per axis, vectorized and defined
        for negative frequencies too.  ``None`` marks an uncoupled axis.
    cross : mapping ``(j, k) -> callable``, optional
        Off-diagonal entries ``G_tot_jk`` for ``j < k``; the ``(k, j)`` entry is
        the complex conjugate.
    omega_max : float
        Quadrature cutoff ``W`` in rad per time unit.
    n_omega : int
        Number of quadrature nodes on ``[0, W]``.
    symmetric : bool, optional
        Declares ``Phi`` real and even.  Inferred from the sampled spectra
        when omitted; a wrong declaration raises ``ValueError``.
    name : str
        Free-form tag used in reports.
    params : dict
        Construction parameters echoed into run manifests.
    """

    def __init__(self, spectra: Sequence[Spectrum | None], *,
                 cross: Mapping[tuple, Spectrum] | None = None,
                 omega_max: float = DEFAULT_OMEGA_MAX,
                 n_omega: int = DEFAULT_N_OMEGA,
                 symmetric: bool | None = None,
                 name: str = "custom", params: dict | None = None):
        if not omega_max > 0 or not np.isfinite(omega_max):
            raise ValueError("omega_max must be positive and finite")
        if n_omega < 16:
            raise ValueError("n_omega must be at least 16")
        self.spectra = tuple(spectra)
        self.cross = dict(cross or {})
        for (j, k) in self.cross:
            if not (0 <= j < k < self.n_axes):
                raise ValueError(f"invalid cross-spectrum index {(j, k)}")
        self.omega_max = float(omega_max)
        self.n_omega = int(n_omega)
        self.name = name
        self.params = dict(params or {})

        self.omega = np.linspace(0.0, self.omega_max, self.n_omega)
        self.d_omega = self.omega[1] - self.omega[0]
        w = np.full(self.n_omega, self.d_omega)
        w[0] = w[-1] = self.d_omega / 2
        self.omega_weights = w
        self._s_pos = self.spectral_matrix(self.omega)
        self._s_neg = self.spectral_matrix(-self.omega)
        self._s_pos.setflags(write=False)
        self._s_neg.setflags(write=False)

        self._check_psd()
        even = np.allclose(self._s_neg, self._s_pos.transpose(0, 2, 1),
                           rtol=1e-12, atol=1e-14 * max(1.0, self.peak))
        real = np.allclose(self._s_pos.imag, 0.0, atol=1e-14 * max(1.0, self.peak))
        inferred = bool(even and real)
        if symmetric is None:
            symmetric = inferred
        elif symmetric and not inferred:
            raise ValueError("bath declared symmetric but its spectrum is not real and even")
        self.symmetric = bool(symmetric)

        self._lag_tables: dict = {}
        self._lock = threading.Lock()

    # ------------------------------------------------------------------ basics
    @property
    def n_axes(self) -> int:
        return len(self.spectra)

    @property
    def is_diagonal(self) -> bool:
        return not self.cross

    @property
    def active_axes(self) -> tuple:
        """Axes carrying a nonzero spectrum."""
        act = set(j for j, s in enumerate(self.spectra) if s is not None)
        for (j, k) in self.cross:
            act.update((j, k))
        return tuple(sorted(act))

    @property
    def peak(self) -> float:
        diag = np.einsum("mjj->mj", self._s_pos).real
        return float(np.max(np.abs(diag))) if diag.size else 0.0

    @property
    def max_lag(self) -> float:
        """Largest |t| before the periodic images of the quadrature overlap."""
        return np.pi / self.d_omega

    def spectral_matrix(self, omega) -> np.ndarray:
        """Full spectral matrix ``G_tot(omega)``, shape ``omega.shape + (n, n)``."""
        omega = np.asarray(omega, dtype=float)
        n = self.n_axes
        out = np.zeros(omega.shape + (n, n), dtype=complex)
        for j, s in enumerate(self.spectra):
            if s is not None:
                out[..., j, j] = s(omega)
        for (j, k), s in self.cross.items():
            v = s(omega)
            out[..., j, k] = v
            out[..., k, j] = np.conj(v)
        return out

    def _check_psd(self):
        tol = 1e-10 * max(1.0, self.peak)
        for s in (self._s_pos, self._s_neg):
            if self.is_diagonal:
                ev = np.einsum("mjj->mj", s).real
            else:
                ev = np.linalg.eigvalsh(s)
            if np.min(ev, initial=0.0) < -tol:
                raise ValueError("bath spectral matrix is not positive semidefinite")

    # ------------------------------------------------------------ correlations
    def correlation(self, t) -> np.ndarray:
        """Correlation matrix ``Phi(t)``, shape ``t.shape + (n, n)``.

        Raises
        ------
        ValueError
            If ``|t|`` exceeds :attr:`max_lag`, where the finite frequency
            resolution aliases the result.
        """
        n = self.n_axes
        pairs = [(j, k) for j in range(n) for k in range(n)]
        t = np.asarray(t, dtype=float)
        return self.correlation_entries(t, pairs).reshape(t.shape + (n, n))

    def correlation_entries(self, t, pairs) -> np.ndarray:
        """Selected entries ``Phi_jk(t)``, shape ``t.shape + (len(pairs),)``."""
        t = np.asarray(t, dtype=float)
        if t.size and np.max(np.abs(t)) > self.max_lag:
            raise ValueError(
                f"|t| = {np.max(np.abs(t)):.4g} exceeds the aliasing-free range "
                f"{self.max_lag:.4g} of the frequency grid; increase n_omega")
        rows, cols = np.array(pairs, dtype=int).reshape(-1, 2).T
        w = self.omega_weights[:, None]
        sp = self._s_pos[:, rows, cols] * w
        sn = self._s_neg[:, rows, cols] * w
        flat = t.reshape(-1)
        out = np.empty((flat.size, rows.size), dtype=complex)
        chunk = max(1, 2**22 // self.n_omega)
        for i in range(0, flat.size, chunk):
            arg = np.outer(flat[i:i + chunk], self.omega)
            if self.symmetric:
                out[i:i + chunk] = (np.cos(arg) @ sp.real) / np.pi
            else:
                e = np.exp(-1j * arg)
                out[i:i + chunk] = (e @ sp + np.conj(e) @ sn) / (2 * np.pi)
        return out.reshape(t.shape + (rows.size,))

    def grid_pairs(self, axes=None):
        """Entries needed for kernels: diagonal only for diagonal baths."""
        axes = self.active_axes if axes is None else tuple(axes)
        if self.is_diagonal:
            return [(j, j) for j in axes]
        return [(j, k) for j in axes for k in axes]

    def correlation_grid(self, times, axes=None) -> np.ndarray:
        """``Phi(t_a - t_b)`` restricted to ``axes`` (default: active axes).

        Returns shape ``(n_t, n_t, k)`` (diagonal entries) for diagonal baths
        and ``(n_t, n_t, k, k)`` otherwise.  Uniform grids use the exact
        Toeplitz structure; other grids interpolate a dense lag table with
        cubic splines.
        """
        axes = self.active_axes if axes is None else tuple(axes)
        pairs = self.grid_pairs(axes)
        times = np.asarray(times, dtype=float)
        dt = np.diff(times)
        n_t = times.size
        if n_t > 1 and np.allclose(dt, dt[0], rtol=1e-9, atol=0):
            lags = self.correlation_entries(np.arange(n_t) * dt[0], pairs)
            idx = np.arange(n_t)
            diff = idx[:, None] - idx[None, :]
            phi = lags[np.abs(diff)]
            neg = diff < 0
            if self.is_diagonal:
                phi[neg] = np.conj(phi[neg])
                return phi
            k = len(axes)
            phi = phi.reshape(n_t, n_t, k, k)
            phi[neg] = np.conj(np.swapaxes(phi[neg], -1, -2))
            return phi
        return self.correlation_interp(times[:, None] - times[None, :], axes)

    def correlation_interp(self, tau, axes=None) -> np.ndarray:
        """Spline-interpolated ``Phi(tau)`` from a dense cached lag table.

        Output layout as in :meth:`correlation_grid`.
        """
        axes = self.active_axes if axes is None else tuple(axes)
        pairs = self.grid_pairs(axes)
        tau = np.asarray(tau, dtype=float)
        t_max = float(np.max(np.abs(tau))) if tau.size else 0.0
        spline = self._lag_spline(t_max, tuple(pairs))
        vals = spline(np.abs(tau))
        m = len(pairs)
        phi = vals[..., :m] + 1j * vals[..., m:]
        neg = tau < 0
        if self.is_diagonal:
            if np.any(neg):
                phi[neg] = np.conj(phi[neg])
            return phi
        k = len(axes)
        phi = phi.reshape(tau.shape + (k, k))
        if np.any(neg):
            phi[neg] = np.conj(np.swapaxes(phi[neg], -1, -2))
        return phi

    def _lag_spline(self, t_max: float, pairs: tuple):
        with self._lock:
            for (key_t, key_p), spline in self._lag_tables.items():
                if key_p == pairs and key_t >= t_max:
                    return spline
            t_max = max(t_max, 1e-12)
            h = min(np.pi / (32 * self.omega_max), t_max / 64)
            n_lag = int(np.ceil(t_max / h)) + 1
            lags = np.linspace(0.0, t_max, n_lag)
            phi = self.correlation_entries(lags, pairs)
            spline = CubicSpline(lags, np.concatenate([phi.real, phi.imag], axis=1), axis=0)
            self._lag_tables[(t_max, pairs)] = spline
            return spline

    # ------------------------------------------------------------ derived models
    def spectrum_matrices(self, omega):
        """Return ``(G_re, G_im, G_tot)`` at ``omega``.

        ``G_re`` and ``G_im`` are the transforms of ``Re Phi`` and ``Im Phi``
        so that ``G_tot = G_re + i G_im``.
        """
        omega = np.asarray(omega, dtype=float)
        g_tot = self.spectral_matrix(omega)
        g_mirror = np.swapaxes(self.spectral_matrix(-omega), -1, -2)
        g_re = (g_tot + g_mirror) / 2
        g_im = (g_tot - g_mirror) / 2j
        return g_re, g_im, g_tot

    def scaled(self, factor: float) -> "BathModel":
        if factor < 0:
            raise ValueError("scale factor must be nonnegative")
        spectra = [None if s is None else _scale(s, factor) for s in self.spectra]
        cross = {k: _scale(s, factor) for k, s in self.cross.items()}
        return BathModel(spectra, cross=cross, omega_max=self.omega_max,
                         n_omega=self.n_omega, name=self.name,
                         params={**self.params, "scale": factor})

    def embedded(self, n_axes: int, axes: Sequence[int]) -> "BathModel":
        """Place this bath's axes at positions ``axes`` of a larger basis."""
        if len(axes) != self.n_axes:
            raise ValueError("one target axis per bath axis required")
        spectra = [None] * n_axes
        for j, a in enumerate(axes):
            spectra[a] = self.spectra[j]
        cross = {}
        for (j, k), s in self.cross.items():
            a, b = axes[j], axes[k]
            cross[(a, b) if a < b else (b, a)] = s if a < b else _conj(s)
        return BathModel(spectra, cross=cross, omega_max=self.omega_max,
                         n_omega=self.n_omega, name=self.name,
                         params={**self.params, "embedded_axes": list(axes)})

    def with_grid(self, omega_max: float | None = None, n_omega: int | None = None):
        return BathModel(self.spectra, cross=self.cross,
                         omega_max=omega_max or self.omega_max,
                         n_omega=n_omega or self.n_omega, name=self.name,
                         params=self.params)

    def __repr__(self):
        return (f"BathModel(name={self.name!r}, n_axes={self.n_axes}, "
                f"omega_max={self.omega_max:g}, n_omega={self.n_omega}, "
                f"symmetric={self.symmetric})")


def _scale(s, factor):
    return lambda w: factor * s(w)


def _conj(s):
    return lambda w: np.conj(s(w))


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return lambda w: a(w) + b(w)


def correlation(model: BathModel, t) -> np.ndarray:
    """``Phi(t)`` of ``model`` by frequency quadrature."""
    return model.correlation(t)


def spectrum_matrices(model: BathModel, omega):
    return model.spectrum_matrices(omega)


def _per_axis(value, n_axes, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n_axes,)).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def make_ohmic_cutoff(coupling: float, cutoff, softness: float = 1.0, *,
                      n_axes: int = 3, omega_max: float | None = None,
                      n_omega: int = DEFAULT_N_OMEGA, t_gate: float = 1.0) -> BathModel:
    """Ohmic spectrum with a smooth cutoff on each axis.

    ``G_i(omega) = coupling * |omega| * exp(-|omega / cutoff_i| ** (2 / softness))``;
    ``softness = 1`` gives the Gaussian roll-off ``exp(-x**2)``, larger values
    soften the cutoff.
    """
    cut = _per_axis(cutoff, n_axes, "cutoff")
    if np.any(cut <= 0):
        raise ValueError("cutoff must be positive")
    if coupling < 0:
        raise ValueError("coupling must be nonnegative")
    if softness <= 0:
        raise ValueError("softness must be positive")
    p = 2.0 / softness

    def spec(c):
        return lambda w: coupling * np.abs(w) * np.exp(-np.abs(np.asarray(w) / c) ** p)

    return BathModel([spec(c) for c in cut],
                     omega_max=omega_max or DEFAULT_OMEGA_MAX / t_gate, n_omega=n_omega,
                     symmetric=True, name="ohmic",
                     params=dict(coupling=coupling, cutoff=cut.tolist(), softness=softness))


def _lorentz(w, center, width):
    return 1.0 / (1.0 + ((w - center) / width) ** 2)


def make_lorentzian_dip(amplitude: float, center: float, width: float,
                        dip_center, dip_width, dip_depth=1.0, *, n_axes: int = 3,
                        omega_max: float | None = None, n_omega: int = DEFAULT_N_OMEGA,
                        t_gate: float = 1.0, clip_tolerance: float = 1e-2) -> BathModel:
    """Lorentzian noise with a Lorentzian-shaped hole on each axis.

    ``G_i = A [L(|w|; c, g) - depth * L(dc_i; c, g) * L(|w|; dc_i, dg)]`` with
    unit-peak Lorentzians ``L``, clipped at zero.  ``depth = 1`` makes the
    spectrum vanish exactly at the dip centre.

    Raises
    ------
    ValueError
        If the unclipped spectrum dips below ``-clip_tolerance`` times its
        maximum anywhere on the quadrature grid.
    """
    dc = _per_axis(dip_center, n_axes, "dip_center")
    dw = _per_axis(dip_width, n_axes, "dip_width")
    depth = _per_axis(dip_depth, n_axes, "dip_depth")
    if width <= 0 or np.any(dw <= 0):
        raise ValueError("Lorentzian widths must be positive")
    if np.any((depth < 0) | (depth > 1)):
        raise ValueError("dip_depth must lie in [0, 1]")
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    omega_max = omega_max or DEFAULT_OMEGA_MAX / t_gate

    def raw(i):
        scale = depth[i] * _lorentz(dc[i], center, width)
        return lambda w: amplitude * (_lorentz(np.abs(w), center, width)
                                      - scale * _lorentz(np.abs(w), dc[i], dw[i]))

    grid = np.linspace(0, omega_max, n_omega)
    for i in range(n_axes):
        vals = raw(i)(grid)
        if vals.min() < -clip_tolerance * max(vals.max(), 1e-300):
            raise ValueError(f"dip on axis {i} drives the spectrum negative beyond clipping tolerance")

    def spec(i):
        f = raw(i)
        return lambda w: np.clip(f(w), 0.0, None)

    return BathModel([spec(i) for i in range(n_axes)], omega_max=omega_max,
                     n_omega=n_omega, symmetric=True, name="lorentzian_dip",
                     params=dict(amplitude=amplitude, center=center, width=width,
                                 dip_center=dc.tolist(), dip_width=dw.tolist(),
                                 dip_depth=depth.tolist()))


def make_one_over_omega(coupling: float, omega_min: float, omega_max: float, *,
                        n_axes: int = 1, axis: int = 0, quad_omega_max: float | None = None,
                        n_omega: int = DEFAULT_N_OMEGA) -> BathModel:
    """Truncated ``1/omega`` spectrum ``coupling / |omega|`` on ``[omega_min, omega_max]``."""
    if not omega_min > 0:
        raise ValueError("omega_min must be positive (the 1/omega law diverges at 0)")
    if not omega_max > omega_min:
        raise ValueError("omega_max must exceed omega_min")

    def spec(w):
        a = np.abs(np.asarray(w, dtype=float))
        inside = (a >= omega_min) & (a <= omega_max)
        return np.where(inside, coupling / np.where(inside, a, 1.0), 0.0)

    spectra = [None] * n_axes
    spectra[axis] = spec
    return BathModel(spectra, omega_max=quad_omega_max or omega_max * 1.05,
                     n_omega=n_omega, symmetric=True, name="one_over_omega",
                     params=dict(coupling=coupling, omega_min=omega_min,
                                 omega_max=omega_max, axis=axis))


def make_white_noise(strength: float, width: float, *, n_axes: int = 3, axes=None,
                     n_omega: int = DEFAULT_N_OMEGA, omega_max: float | None = None) -> BathModel:
    """Nearly delta-correlated bath, ``Phi(t) = strength * g(t)`` per axis.

    ``g`` is a unit-area Gaussian of standard deviation ``width``, so that
    ``G(omega) = strength * exp(-(omega * width)**2 / 2)``.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    axes = range(n_axes) if axes is None else axes
    spectra = [None] * n_axes
    for a in axes:
        spectra[a] = lambda w: strength * np.exp(-(np.asarray(w) * width) ** 2 / 2)
    return BathModel(spectra, omega_max=omega_max or 8.0 / width, n_omega=n_omega,
                     symmetric=True, name="white_noise",
                     params=dict(strength=strength, width=width, axes=list(axes)))


def make_zero_bath(n_axes: int = 3, **kw) -> BathModel:
    return BathModel([None] * n_axes, name="zero", **kw)


def combine_baths(*models: BathModel, omega_max: float | None = None,
                  n_omega: int | None = None) -> BathModel:
    """Sum of independent baths acting on the same axes."""
    n = models[0].n_axes
    if any(m.n_axes != n for m in models):
        raise ValueError("baths must share the axis count")
    spectra = [None] * n
    cross: dict = {}
    for m in models:
        spectra = [_add(a, b) for a, b in zip(spectra, m.spectra)]
        for k, s in m.cross.items():
            cross[k] = _add(cross.get(k), s)
    return BathModel(spectra, cross=cross,
                     omega_max=omega_max or max(m.omega_max for m in models),
                     n_omega=n_omega or max(m.n_omega for m in models),
                     name="+".join(m.name for m in models),
                     params={m.name: m.params for m in models})


# Reference parameter sets used by the examples, tests and acceptance runs.
BUILTIN_BATHS = {
    "ohmic": dict(coupling=0.01, cutoff=[2.0, 4.0, 8.0], softness=1.0),
    "lorentzian_dip": dict(amplitude=0.05, center=0.0, width=10.0,
                           dip_center=[4.0, 8.0, 12.0], dip_width=2.0, dip_depth=1.0),
}


def builtin_bath(name: str, **overrides) -> BathModel:
    """One of the two reference baths, optionally with overridden parameters."""
    if name not in BUILTIN_BATHS:
        raise ValueError(f"unknown built-in bath {name!r}; choose from {sorted(BUILTIN_BATHS)}")
    params = {**BUILTIN_BATHS[name], **overrides}
    maker = make_ohmic_cutoff if name == "ohmic" else make_lorentzian_dip
    return maker(**params)
