import numpy as np
import pytest

from analogctl.baths import builtin_bath
from analogctl.control_path import ControlPath, EulerChart, geodesic_path
from analogctl.generators import pauli_basis


def smooth_random_path(seed: int, n_t: int = 128, amplitude: float = 0.6,
                       target="pi-gate") -> ControlPath:
    """Geodesic plus a few random sine modes that vanish at both ends."""
    rng = np.random.default_rng(seed)
    base = geodesic_path(target, n_t)
    s = base.times / base.t_gate
    modes = np.sin(np.pi * np.outer(s, np.arange(1, 4)))
    f = base.f_values + amplitude * modes @ rng.standard_normal((3, 3))
    return base.with_f(f)


def random_euler_path(seed: int, n_t: int = 64) -> ControlPath:
    """Path with random smooth Euler angles; the target is its own end point."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, n_t + 1)
    modes = np.stack([t, np.sin(np.pi * t), np.sin(2 * np.pi * t) ** 2], axis=1)
    f = modes @ rng.normal(scale=2.0, size=(3, 3))
    return ControlPath(pauli_basis(), t, f, EulerChart())


@pytest.fixture(scope="session")
def ohmic():
    return builtin_bath("ohmic")


@pytest.fixture(scope="session")
def lorentzian():
    return builtin_bath("lorentzian_dip")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
