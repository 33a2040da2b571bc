"""
Euler-Lagrange optimization of control paths.

Minimizing the gate error at fixed parameter-speed energy
``E = int |df/dt|^2 dt`` gives the boundary-value problem

    d^2 f / dt^2 = lam * g(t),    g_l(t1) = int_0^t d/df_l(t1) Re Tr R(t1, t2) dt2,

with ``f(0)`` and ``f(t)`` fixed by the identity and the target gate.  It is
solved by damped fixed-point iteration: compute ``g`` on the current path,
solve the linear two-point problem with a tridiagonal second-difference
matrix, and blend the solution into the current path.  ``lam > 0``
corresponds to minimization; larger ``lam`` buys lower error with more
modulation energy.

At fixed ``lam`` the equation is the stationarity condition of the merit
``error + mu E`` with ``mu = 2 kappa / (d lam)``.  Steps that would increase
either the error or the merit are rejected and the damping is halved; the
error history of accepted iterates is therefore non-increasing, and the
merit check keeps the iterates from overshooting in energy.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solve_banded

from .baths import BathModel
from .control_path import ControlPath, EulerChart, energy_e, energy_es
from .error_functional import DecoherenceKernel, gate_error_time, kappa, kernel

__all__ = [
    "OptimizationConfig",
    "OptimizationResult",
    "gradient_field",
    "gradient_g",
    "directional_derivative",
    "lagrange_lambda",
    "implied_energy",
    "solve_two_point",
    "regularize_path",
    "solve_euler_lagrange",
    "elg_residual",
    "sweep_lambda",
    "select_solution",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizationConfig:
    """Settings for :func:`solve_euler_lagrange`.

    Parameters
    ----------
    lam : float or None
        Multiplier in ``f'' = lam g``.  Ignored when ``energy`` is given.
    energy : float or None
        Target parameter-speed energy ``E``; ``lam`` is then recomputed
        every iteration from the closed-form multiplier.
    alpha : float
        Damping of the fixed-point update, in ``(0, 1]``.
    max_iters : int
    tol : float
        Stop when ``max |f_EL - f| < tol`` (undamped update size).
    regularize : float
        Amplitude of the ``sin(pi t / T)`` offset added to the middle Euler
        angle when the initial path sits on the degenerate ``f2 = 0`` set,
        where the gradient vanishes identically.
    fd_step : float
        Finite-difference step for parameter derivatives.
    analytic : bool
        Use analytic chart derivatives when available.
    max_rejections : int
        Consecutive rejected steps before giving up.
    max_step : float
        Cap on the change of any parameter per iteration (radians).  Large
        ``lam`` makes the undamped update large; capping it keeps the
        iterates in the region where the linearized gradient is useful.
    """

    lam: float | None = 0.1
    energy: float | None = None
    alpha: float = 0.3
    max_iters: int = 200
    tol: float = 1e-6
    regularize: float = 1e-6
    fd_step: float = 1e-5
    analytic: bool = True
    max_rejections: int = 12
    max_step: float = 0.05

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.energy is None and (self.lam is None or self.lam < 0):
            raise ValueError("need lam >= 0 or a target energy")
        if self.energy is not None and self.energy < 0:
            raise ValueError("energy must be nonnegative")


@dataclass
class OptimizationResult:
    """Outcome of one Euler-Lagrange run.

    ``status`` is ``converged``, ``max_iters`` or ``stalled`` (too many
    consecutive rejected steps).  ``error_history`` holds the error of every
    accepted iterate, starting with the initial path.
    """

    path: ControlPath
    lam: float
    error_history: list
    status: str
    iterations: int
    energy_e: float
    energy_es: float
    implied_energy: float
    elg_residual: float
    update_norm: float
    initial_path: ControlPath = field(repr=False)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def f(self) -> np.ndarray:
        return self.path.f_values

    @property
    def error_initial(self) -> float:
        return self.error_history[0]

    @property
    def error_final(self) -> float:
        return self.error_history[-1]


# ------------------------------------------------------------------ gradient
def gradient_field(path: ControlPath, kern: DecoherenceKernel | None = None,
                   bath: BathModel | None = None, *, h: float = 1e-5,
                   analytic: bool = True) -> np.ndarray:
    """``g(t1)`` on every grid point, shape ``(n + 1, n_params)``.

    ``g_l(t_a) = Re sum_ji d eps_ji(t_a)/d f_l * M_ji(t_a)`` with
    ``M(t_a) = sum_b w_b Phi(t_a - t_b) eps(t_b)``: the derivative acts on
    ``eps(t1)`` only, with ``eps(t2)`` held fixed.
    """
    if kern is None:
        kern = kernel(path, bath)
    M = kern.contract()
    deps = path.epsilon_derivatives(h=h, analytic=analytic)
    return np.einsum("nlji,nji->nl", deps, M).real


def gradient_g(path: ControlPath, bath: BathModel, t1, *, h: float = 1e-5,
               analytic: bool = False) -> np.ndarray:
    """``g(t1)`` at one grid time (finite differences by default)."""
    i = path.index_of(t1)
    return gradient_field(path, bath=bath, h=h, analytic=analytic)[i]


def directional_derivative(path: ControlPath, g: np.ndarray, direction: np.ndarray) -> float:
    """First-order change of the discrete gate error along ``direction``.

    ``f(t1)`` enters the double integral twice (as ``t1`` and as ``t2``),
    so ``d error = (4 kappa / d) sum_a w_a g(t_a) . e(t_a)``.
    """
    return float(4 * kappa(path.d) / path.d
                 * np.sum(path.weights[:, None] * g * direction))


# --------------------------------------------------------- Lagrange multiplier
def _abc(times, fdot0, g):
    G1 = cumulative_trapezoid(g, times, axis=0, initial=0.0)
    a = np.trapezoid(np.sum(G1**2, axis=1), times)
    b = np.trapezoid(G1 @ fdot0, times)
    c = (times[-1] - times[0]) * float(fdot0 @ fdot0)
    return float(a), float(b), float(c)


def lagrange_lambda(times, f, g, E: float, fdot0=None) -> float:
    """Multiplier ``lam = (sqrt(b^2 + a (E - c)) - b) / a``.

    With ``G(t1) = int_0^t1 g``: ``a = int |G|^2``, ``b = int fdot(0) . G``
    and ``c = t |fdot(0)|^2``; these follow from inserting
    ``fdot(t1) = fdot(0) + lam G(t1)`` into ``E = int |fdot|^2``.
    ``fdot0`` defaults to the slope of ``f`` at ``t = 0``.

    Raises
    ------
    ValueError
        If ``a = 0`` (``g`` vanishes: there is no descent direction), or the
        energy is below the reachable minimum ``c - b^2 / a``.
    """
    times = np.asarray(times, dtype=float)
    f = np.asarray(f, dtype=float).reshape(times.size, -1)
    g = np.asarray(g, dtype=float).reshape(times.size, -1)
    if fdot0 is None:
        fdot0 = (f[1] - f[0]) / (times[1] - times[0])
    a, b, c = _abc(times, np.asarray(fdot0, dtype=float), g)
    if not a > 0:
        raise ValueError("a = 0: the gradient field vanishes, no descent direction")
    disc = b * b + a * (E - c)
    if disc < 0:
        raise ValueError(f"energy {E:g} is below the minimum {c - b * b / a:g} reachable with this g")
    return (np.sqrt(disc) - b) / a


def implied_energy(times, g, lam: float, fdot0) -> float:
    """``E = c + 2 lam b + lam^2 a`` for the path ``fdot = fdot0 + lam int g``."""
    a, b, c = _abc(np.asarray(times, float), np.asarray(fdot0, float), np.asarray(g, float))
    return c + 2 * lam * b + lam * lam * a


def _initial_slope(times, f, g, lam):
    """``fdot(0)`` consistent with ``f'' = lam g`` and both end values."""
    G1 = cumulative_trapezoid(g, times, axis=0, initial=0.0)
    T = times[-1] - times[0]
    return (f[-1] - f[0] - lam * np.trapezoid(G1, times, axis=0)) / T


# ------------------------------------------------------------ linear solve
def solve_two_point(times, start, end, rhs) -> np.ndarray:
    """Solve ``f'' = rhs`` with ``f(0) = start``, ``f(t) = end``.

    Three-point second differences on the (possibly non-uniform) grid; the
    tridiagonal system is solved for all parameter columns at once.
    """
    times = np.asarray(times, dtype=float)
    rhs = np.asarray(rhs, dtype=float).reshape(times.size, -1)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    hl = np.diff(times)[:-1]
    hr = np.diff(times)[1:]
    lo = 2 / (hl * (hl + hr))
    up = 2 / (hr * (hl + hr))
    n = times.size - 2
    ab = np.zeros((3, n))
    ab[0, 1:] = up[:-1]
    ab[1] = -(lo + up)
    ab[2, :-1] = lo[1:]
    b = rhs[1:-1].copy()
    b[0] -= lo[0] * start
    b[-1] -= up[-1] * end
    out = np.empty_like(rhs)
    out[0], out[-1] = start, end
    out[1:-1] = solve_banded((1, 1), ab, b)
    return out


# ----------------------------------------------------------------- driver
def regularize_path(path: ControlPath, amplitude: float = 1e-6) -> ControlPath:
    """Move an Euler path off the degenerate ``f2 = 0 (mod 2 pi)`` set.

    Adds ``amplitude * sin(pi t / T)`` to the middle angle wherever the
    whole interior sits on the degenerate set; other paths are returned
    unchanged.  The boundary values are untouched.
    """
    chart = path.chart
    base = getattr(chart, "base", chart)
    if not isinstance(base, EulerChart) or amplitude == 0:
        return path
    f2 = path.f_values[1:-1, 1]
    if np.max(np.abs(np.sin(f2 / 2))) > 1e-9:
        return path
    f = path.f_values.copy()
    f[:, 1] += amplitude * np.sin(np.pi * path.times / path.t_gate)
    f[0, 1], f[-1, 1] = path.f_values[0, 1], path.f_values[-1, 1]
    return path.with_f(f)


def _with_path(kern: DecoherenceKernel, path: ControlPath) -> DecoherenceKernel:
    return DecoherenceKernel(path, kern.sources)


def solve_euler_lagrange(config: OptimizationConfig, bath: BathModel,
                         initial: ControlPath, kern: DecoherenceKernel | None = None
                         ) -> OptimizationResult:
    """Damped fixed-point solution of ``f'' = lam g`` from ``initial``.

    ``lam = 0`` means no modulation budget: the initial path is returned
    after one evaluation.  ``kern`` may supply a precomputed kernel on the
    initial grid (its correlation sources are reused for every iterate;
    noise kernels can be folded in this way).

    Raises
    ------
    FloatingPointError
        If the gradient becomes non-finite.
    """
    path = regularize_path(initial, config.regularize)
    kern = kernel(path, bath) if kern is None else _with_path(kern, path)
    err = gate_error_time(kern)
    history = [err]
    times = path.times
    f = path.f_values.copy()
    start, end = f[0].copy(), f[-1].copy()
    fixed_lam = config.energy is None
    lam = float(config.lam) if fixed_lam else 0.0

    def finish(status, it, g, update):
        fdot0 = _initial_slope(times, path.f_values, g, lam)
        return OptimizationResult(
            path=path, lam=lam, error_history=history, status=status, iterations=it,
            energy_e=energy_e(path), energy_es=energy_es(path),
            implied_energy=implied_energy(times, g, lam, fdot0),
            elg_residual=elg_residual(path, lam, kern=kern, g=g), update_norm=update,
            initial_path=initial)

    g = gradient_field(path, kern, h=config.fd_step, analytic=config.analytic)
    if fixed_lam and lam == 0:
        return finish("converged", 1, g, 0.0)

    # With fixed lam the iteration is a stationary point of error + mu * E;
    # steps must lower both that merit and the error itself.
    mu = 2 * kappa(path.d) / (path.d * lam) if fixed_lam else 0.0
    merit = err + mu * energy_e(path)
    alpha = config.alpha
    rejections = 0
    update = np.inf
    status = "max_iters"
    it = 0
    for it in range(1, config.max_iters + 1):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at iteration {it}")
        if not fixed_lam:
            try:
                lam = lagrange_lambda(times, f, g, config.energy)
            except ValueError:
                lam = 0.0
        f_el = solve_two_point(times, start, end, lam * g)
        update = float(np.max(np.abs(f_el - f)))
        if update < config.tol:
            status = "converged"
            break
        step = min(alpha, config.max_step / update)
        f_try = f + step * (f_el - f)
        f_try[0], f_try[-1] = start, end
        path_try = path.with_f(f_try)
        kern_try = _with_path(kern, path_try)
        err_try = gate_error_time(kern_try)
        if not np.isfinite(err_try):
            raise FloatingPointError(f"non-finite error at iteration {it}")
        merit_try = err_try + mu * energy_e(path_try) if mu else err_try
        if err_try > err or merit_try > merit:
            rejections += 1
            alpha /= 2
            log.debug("iteration %d rejected (error %.6g -> %.6g, merit %.6g -> %.6g), "
                      "alpha -> %g", it, err, err_try, merit, merit_try, alpha)
            if rejections >= config.max_rejections:
                status = "stalled"
                break
            continue
        rejections = 0
        alpha = min(config.alpha, 1.25 * alpha)
        f, path, kern, err, merit = f_try, path_try, kern_try, err_try, merit_try
        history.append(err)
        g = gradient_field(path, kern, h=config.fd_step, analytic=config.analytic)
    return finish(status, it, g, update)


# ------------------------------------------------------------- diagnostics
def elg_residual(path: ControlPath, lam: float, bath: BathModel | None = None, *,
                 kern: DecoherenceKernel | None = None, g=None, h: float = 1e-5) -> float:
    """Sup norm of ``Re Tr[U'' dU^dag/df_l] - 2 lam g_l`` over interior points.

    This is the stationarity condition of the error at fixed ``E_S``
    written with the operator kernel, whose trace is twice ``Tr R``.
    ``U''`` uses three-point second differences; ``dU/df_l`` comes from the
    chart (or central differences).  Diagnostic only.
    """
    t = path.times
    U = path.unitaries
    hl = np.diff(t)[:-1, None, None]
    hr = np.diff(t)[1:, None, None]
    Udd = 2 * (U[2:] * hl - U[1:-1] * (hl + hr) + U[:-2] * hr) / (hl * hr * (hl + hr))
    dU = path.chart.derivatives(path.f_values, t)
    if dU is None:
        dU = np.empty(U.shape[:1] + (path.n_params,) + U.shape[1:], dtype=complex)
        for l in range(path.n_params):
            step = np.zeros(path.n_params)
            step[l] = h
            dU[:, l] = (path.chart.unitaries(path.f_values + step, t)
                        - path.chart.unitaries(path.f_values - step, t)) / (2 * h)
    geo = np.einsum("nab,nlab->nl", Udd, dU[1:-1].conj()).real
    if lam == 0:
        return float(np.max(np.abs(geo)))
    if g is None:
        g = gradient_field(path, kern, bath, h=h)
    return float(np.max(np.abs(geo - 2 * lam * g[1:-1])))


# ------------------------------------------------------------------ sweeps
def sweep_lambda(bath: BathModel, initial: ControlPath, lams, config: OptimizationConfig | None = None,
                 threads: int = 1) -> list:
    """Run :func:`solve_euler_lagrange` for every ``lam``; results in input order."""
    lams = list(lams)
    if not lams:
        raise ValueError("empty lambda sweep")
    config = config or OptimizationConfig()
    kern = kernel(regularize_path(initial, config.regularize), bath)

    def one(lam):
        return solve_euler_lagrange(replace(config, lam=float(lam), energy=None), bath, initial, kern)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, lams))
    return [one(lam) for lam in lams]


def select_solution(results, threshold: float):
    """Lowest-``E_S`` result whose final error is below ``threshold`` (or None)."""
    ok = [r for r in results if r.error_final < threshold]
    if not ok:
        return None
    return min(ok, key=lambda r: r.energy_es)
