"""
Leakage out of a qubit encoded in the lower two levels of a three-level system.

A qubit design is carried over to the qutrit by placing the qubit
propagator on the ``|1>, |2>`` block and multiplying it with
``exp(-i t detune g8)``, which separates level ``|3>`` by ``sqrt(3) detune``.
The qubit bath keeps acting on ``g1..g3``; a leakage bath couples
``|2> <-> |3>`` through ``g6``.  Errors are averaged over states of the
qubit subspace with the subspace weights of
:mod:`analogctl.error_functional`.

The *relative surplus* compares the error with and without the leakage
bath; a large detuning moves the ``|2> <-> |3>`` coupling out of the
leakage band and suppresses the surplus.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baths import BathModel, make_one_over_omega
from .control_path import ControlPath, EmbeddedChart, refine_path
from .error_functional import SubspaceWeights, kernel, subspace_error, subspace_weights
from .generators import gell_mann_basis

__all__ = [
    "LEAKAGE_AXIS",
    "QUBIT_AXES",
    "qubit_projector",
    "embed_path",
    "default_leakage_bath",
    "LeakageScenario",
    "SurplusResult",
    "surplus_error",
]

QUBIT_AXES = (0, 1, 2)
LEAKAGE_AXIS = 5  # g6, the |2> <-> |3> coupling


def qubit_projector() -> np.ndarray:
    return np.diag([1.0, 1.0, 0.0]).astype(complex)


def embed_path(base: ControlPath, detune: float = 0.0,
               max_phase_step: float = np.pi / 8) -> ControlPath:
    """Qutrit version of a qubit path, ``U3 = exp(-i t detune g8) . (U2 (+) 1)``.

    The detuning rotates level ``|3>`` against the qubit block at the rate
    ``sqrt(3) detune``; the grid is refined so that one step advances that
    phase by at most ``max_phase_step``.
    """
    if base.d != 2:
        raise ValueError("base path must be a qubit path")
    if detune:
        base = refine_path(base, max_phase_step / (np.sqrt(3) * abs(detune)))
    chart = EmbeddedChart(base.chart, detune)
    target = chart.unitaries(base.f_values[-1], base.times[-1])
    return ControlPath(gell_mann_basis(), base.times, base.f_values, chart, target,
                       name=f"{base.name}@detune={detune:g}", meta=dict(base.meta, detune=detune))


def default_leakage_bath(coupling: float = 0.05, omega_min: float = 0.1,
                         omega_max: float = 100.0, t_gate: float = 1.0,
                         n_omega: int = 8192) -> BathModel:
    """Truncated ``1/omega`` bath on the ``g6`` axis of the qutrit."""
    one = make_one_over_omega(coupling, omega_min / t_gate, omega_max / t_gate,
                              n_omega=n_omega)
    return one.embedded(8, (LEAKAGE_AXIS,))


@dataclass
class LeakageScenario:
    """Qubit path, detuning and leakage bath.

    Parameters
    ----------
    base : ControlPath
        Qubit path to carry over.
    detune : float
        Level separation parameter (time independent).
    leakage_bath : BathModel
        Eight-axis bath, normally only on :data:`LEAKAGE_AXIS`.
    """

    base: ControlPath
    detune: float = 0.0
    leakage_bath: BathModel = field(default_factory=default_leakage_bath)
    weights: SubspaceWeights = field(init=False)

    def __post_init__(self):
        if self.leakage_bath.n_axes != 8:
            raise ValueError("leakage bath must have 8 axes (Gell-Mann basis)")
        self.weights = subspace_weights(gell_mann_basis(), qubit_projector())

    @property
    def path(self) -> ControlPath:
        return embed_path(self.base, self.detune)


@dataclass(frozen=True)
class SurplusResult:
    with_leakage: float
    without_leakage: float
    relative_surplus: float
    leakage_population: float

    def __iter__(self):
        return iter((self.with_leakage, self.without_leakage, self.relative_surplus))


def surplus_error(scenario: LeakageScenario, qubit_bath: BathModel) -> SurplusResult:
    """Subspace error with and without the leakage bath.

    ``qubit_bath`` is a three-axis bath placed on ``g1..g3`` (an eight-axis
    bath is used as is).  Unpacks as ``(with, without, relative)``;
    ``relative`` is NaN when the error without leakage vanishes.
    """
    path = scenario.path
    if qubit_bath.n_axes == 3:
        qubit_bath = qubit_bath.embedded(8, QUBIT_AXES)
    elif qubit_bath.n_axes != 8:
        raise ValueError("qubit bath must have 3 or 8 axes")
    k_qubit = kernel(path, qubit_bath)
    without, _ = subspace_error(k_qubit, scenario.weights)
    with_leak, population = subspace_error(k_qubit + kernel(path, scenario.leakage_bath),
                                           scenario.weights)
    rel = with_leak / without - 1 if without != 0 else float("nan")
    return SurplusResult(with_leak, without, rel, population)
