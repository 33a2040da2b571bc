"""
Dynamical-decoupling pulse sequences as control paths.

Sequences are written in a small token grammar: ``f`` is a free-evolution
interval and ``X`` / ``Z`` are pi pulses about that axis.  The families are

* ``UDD`` (Uhrig): ``n`` pulses at ``tau_j = t sin^2(pi j / (2 (n + 1)))``;
  ``SE`` (spin echo) and ``CPMG`` are ``n = 1`` and ``n = 2``,
* ``CDD`` (concatenated): ``p_0 = f``, ``p_{l+1} = p_l X p_l Z p_l X p_l Z``;
  ``PDD`` (periodic) is level 1, ``(fXfZ)^2``,
* ``CUDD``: ``p_0 = UDD_n``, ``p_{l+1} = p_l X p_l X``,
* ``BB`` (bang-bang): ``(fXfZ)^k`` with ``2k`` pulses.

After expansion, neighbouring free intervals merge and adjacent identical
pulses cancel (``XX`` and ``ZZ`` are the identity up to phase).  Each
remaining pulse is a square pulse of width ``T`` centred on its ideal
instant, shifted inside ``[0, t]`` at the ends; pulses that fall on the same
instant are played back to back.  The free intervals carry no control, so
the path's unitary is the product of the pulses played so far.  No
compensating pulse is appended: the implemented gate is whatever the
pulses multiply to.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control_path import ControlPath, PulseTrainChart, energy_es, gate_distance
from .generators import pauli_basis

__all__ = [
    "KINDS",
    "PulseSequence",
    "udd_times",
    "expand_tokens",
    "simplify_tokens",
    "build_sequence",
    "sequence_energy",
    "pulse_energy",
    "bang_bang",
]

KINDS = ("SE", "CPMG", "UDD", "PDD", "CDD", "CUDD", "BB")
_PI_EXT = np.longdouble("3.14159265358979323846264338327950288")


def udd_times(n: int, t: float = 1.0) -> np.ndarray:
    """Uhrig pulse instants ``t sin^2(pi j / (2 (n + 1)))``, ``j = 1..n``."""
    if n < 1:
        raise ValueError("UDD needs at least one pulse")
    # fractions in extended precision, rounded once: t/2, t/4, 3t/4 come out exact
    j = np.arange(1, n + 1, dtype=np.longdouble)
    frac = np.sin(_PI_EXT * j / (2 * (n + 1))) ** 2
    return t * frac.astype(float)


def _udd_tokens(n: int, axis: str):
    """UDD_n as tokens with free intervals in units of the total time."""
    edges = np.concatenate([[0.0], udd_times(n, 1.0), [1.0]])
    toks = []
    for k in range(n):
        toks += [("f", edges[k + 1] - edges[k]), axis]
    toks.append(("f", edges[-1] - edges[-2]))
    return toks


def _scale(tokens, factor):
    return [(tok[0], tok[1] * factor) if isinstance(tok, tuple) else tok for tok in tokens]


def expand_tokens(kind: str, n: int = 1, level: int = 1, axis: str = "Z",
                  repetitions: int = 1):
    """Expand a sequence family into tokens.

    Free intervals are ``("f", fraction)`` with fractions of the total time
    that sum to one; pulses are the strings ``"X"`` or ``"Z"``.  The result
    is not simplified (see :func:`simplify_tokens`).
    """
    kind = kind.upper()
    axis = axis.upper()
    if axis not in ("X", "Z"):
        raise ValueError("pulse axis must be X or Z")
    if kind == "SE":
        toks = _udd_tokens(1, axis)
    elif kind == "CPMG":
        toks = _udd_tokens(2, axis)
    elif kind == "UDD":
        toks = _udd_tokens(n, axis)
    elif kind in ("PDD", "CDD"):
        lvl = 1 if kind == "PDD" else level
        if lvl < 1:
            raise ValueError("concatenation level must be at least 1")
        toks = [("f", 1.0)]
        for _ in range(lvl):
            toks = _scale(toks, 0.25)
            toks = toks + ["X"] + toks + ["Z"] + toks + ["X"] + toks + ["Z"]
    elif kind == "CUDD":
        if level < 0:
            raise ValueError("concatenation level must be nonnegative")
        toks = _udd_tokens(n, axis)
        for _ in range(level):
            toks = _scale(toks, 0.5)
            toks = toks + ["X"] + toks + ["X"]
    elif kind == "BB":
        if n < 2 or n % 2:
            raise ValueError("bang-bang needs an even pulse count >= 2")
        k = n // 2
        toks = []
        for _ in range(k):
            toks += [("f", 0.5 / k), "X", ("f", 0.5 / k), "Z"]
    else:
        raise ValueError(f"unknown sequence kind {kind!r}; expected one of {KINDS}")
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    return _scale(toks, 1.0 / repetitions) * repetitions


def simplify_tokens(tokens):
    """Merge adjacent free intervals and cancel adjacent identical pulses."""
    out = []
    for tok in tokens:
        if isinstance(tok, tuple):
            if tok[1] == 0:
                continue
            if out and isinstance(out[-1], tuple):
                out[-1] = ("f", out[-1][1] + tok[1])
            else:
                out.append(tok)
        elif out and out[-1] == tok:
            out.pop()
            # the cancellation may expose two free intervals
            if len(out) >= 2 and isinstance(out[-1], tuple) and isinstance(out[-2], tuple):
                b = out.pop()
                out[-1] = ("f", out[-1][1] + b[1])
        else:
            out.append(tok)
    return out


@dataclass(frozen=True)
class PulseSequence:
    """Specification of a pulse sequence.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    n : int
        Pulse count for ``UDD`` and ``BB``; inner UDD count for ``CUDD``.
    level : int
        Concatenation level for ``CDD`` and ``CUDD``.
    pulse_width : float
        Square-pulse width ``T``.
    t_gate : float
    axis : str
        Pulse axis for the UDD family (``X`` or ``Z``).
    repetitions : int
        Number of back-to-back copies of the basic sequence.
    n_t : int
        Intervals of the base uniform grid.
    points_per_pulse : int
        Grid intervals inside each pulse (at least 8).
    """

    kind: str
    n: int = 1
    level: int = 1
    pulse_width: float = 1e-3
    t_gate: float = 1.0
    axis: str = "Z"
    repetitions: int = 1
    n_t: int = 256
    points_per_pulse: int = 16
    label: str = field(default="", compare=False)

    def tokens(self):
        return simplify_tokens(expand_tokens(self.kind, self.n, self.level, self.axis,
                                             self.repetitions))

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        k = self.kind.upper()
        if k in ("UDD", "BB"):
            return f"{k}-{self.n}"
        if k == "CDD":
            return f"CDD-{self.level}"
        if k == "CUDD":
            return f"CUDD-{self.n}-{self.level}"
        return k

    def schedule(self):
        """Pulse windows as a list of ``(start, end, axis)``.

        Raises
        ------
        ValueError
            If pulses overlap or do not fit into the gate time.
        """
        if self.pulse_width <= 0:
            raise ValueError("pulse width must be positive")
        t, T = self.t_gate, self.pulse_width
        groups = []  # (instant, [axes])
        clock = 0.0
        for tok in self.tokens():
            if isinstance(tok, tuple):
                clock += tok[1] * t
            elif groups and abs(groups[-1][0] - clock) < 1e-12 * t:
                groups[-1][1].append(tok)
            else:
                groups.append((clock, [tok]))
        windows = []
        for instant, axes in groups:
            width = len(axes) * T
            start = min(max(instant - width / 2, 0.0), t - width)
            if start < 0:
                raise ValueError("pulse group longer than the gate time")
            for k, ax in enumerate(axes):
                windows.append((start + k * T, start + (k + 1) * T, ax))
        for (a0, a1, _), (b0, b1, _) in zip(windows, windows[1:]):
            if b0 < a1 - 1e-12 * t:
                raise ValueError(
                    f"pulses overlap at t = {b0:.6g}; reduce the pulse width {T:g}")
        return windows

    @property
    def n_pulses(self) -> int:
        return sum(1 for tok in self.tokens() if not isinstance(tok, tuple))


def _grid(windows, t_gate, n_t, ppp):
    base = np.linspace(0.0, t_gate, n_t + 1)
    pulse_pts = [np.linspace(a, b, ppp + 1) for a, b, _ in windows]
    if not pulse_pts:
        return base
    pts = np.concatenate(pulse_pts)
    min_gap = min(b - a for a, b, _ in windows) / (4 * ppp)
    # drop base points that crowd a pulse node
    keep = np.array([np.min(np.abs(pts - x)) > min_gap for x in base])
    keep[0] = keep[-1] = True
    grid = np.unique(np.concatenate([base[keep], pts]))
    return grid[(grid >= 0) & (grid <= t_gate)]


def _gate_name(U) -> str:
    """``identity``, ``x``, ``y`` or ``z`` (pi rotations) up to phase, else ``other``."""
    for name, V in zip(("identity", "x", "y", "z"), [np.eye(2)] + list(pauli_basis().generators)):
        if gate_distance(U, V) < 1e-8:
            return name
    return "other"


def build_sequence(spec: PulseSequence) -> ControlPath:
    """Control path of a pulse sequence with square pulses.

    Each pulse ``k`` owns one rotation-angle parameter that ramps linearly
    from 0 to pi across its window (constant Rabi rate ``pi / T``).
    """
    if spec.points_per_pulse < 8:
        raise ValueError("need at least 8 grid intervals per pulse")
    windows = spec.schedule()
    times = _grid(windows, spec.t_gate, spec.n_t, spec.points_per_pulse)
    axes = [ax for _, _, ax in windows]
    f = np.zeros((times.size, len(axes)))
    for k, (a, b, _) in enumerate(windows):
        f[:, k] = np.pi * np.clip((times - a) / (b - a), 0.0, 1.0)
    chart = PulseTrainChart(axes)
    if not axes:
        # free evolution only: one dummy parameter that never moves
        chart = PulseTrainChart(["z"])
        f = np.zeros((times.size, 1))
    net = chart.unitaries(f[-1])
    gate = _gate_name(net)
    meta = {"kind": spec.kind.upper(), "n_pulses": len(axes), "gate": gate,
            "schedule": [(float(a), float(b), ax) for a, b, ax in windows],
            "pulse_width": spec.pulse_width}
    return ControlPath(pauli_basis(), times, f, chart, net, name=spec.name, meta=meta)


def pulse_energy(pulse_width: float) -> float:
    """Energy ``pi^2 / (4 T)`` of one square pi pulse of width ``T``."""
    return np.pi**2 / (4 * pulse_width)


def sequence_energy(spec: PulseSequence) -> float:
    """``E_S`` of the built sequence path."""
    return energy_es(build_sequence(spec))


def bang_bang(n_pulses: int, pulse_width: float = 1e-3, t_gate: float = 1.0,
              **kw) -> PulseSequence:
    """Bang-bang sequence ``(fXfZ)^k`` with ``n_pulses = 2k``."""
    return PulseSequence("BB", n=n_pulses, pulse_width=pulse_width, t_gate=t_gate, **kw)
