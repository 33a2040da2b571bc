"""
Trace-orthogonal Hermitian generator bases of su(d) and their adjoint
(structure-constant) representation.

All bases are normalized to ``Tr(S_j S_k) = 2 delta_jk``.  The generator
ordering is fixed and every downstream matrix index (modulation matrix,
bath correlations, decoherence kernel) inherits it:

* ``d = 2``: Pauli ``(sigma_x, sigma_y, sigma_z)``
* ``d = 3``: Gell-Mann ``gamma_1 ... gamma_8`` in the standard order
* general ``d``: generalized Gell-Mann matrices, symmetric and antisymmetric
  off-diagonal pairs for every ``j < k`` followed by the ``d - 1`` diagonal
  matrices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeneratorBasis",
    "pauli_basis",
    "gell_mann_basis",
    "generalized_gell_mann_basis",
    "basis_for_dimension",
    "trace_coefficient",
    "expansion_coefficients",
    "reconstruct",
    "so_adjoint_generators",
]


@dataclass(frozen=True)
class GeneratorBasis:
    """Ordered set of ``d**2 - 1`` traceless Hermitian generators.

    Parameters
    ----------
    d : int
        Hilbert-space dimension.
    generators : ndarray, shape (d**2 - 1, d, d)
        The generators, normalized to ``Tr(S_j S_k) = 2 delta_jk``.
    labels : tuple of str
        Axis names, one per generator.
    """

    d: int
    generators: np.ndarray
    labels: tuple = field(default=())

    def __post_init__(self):
        gens = np.asarray(self.generators, dtype=complex)
        if gens.shape != (self.d**2 - 1, self.d, self.d):
            raise ValueError(
                f"expected {self.d**2 - 1} generators of shape ({self.d}, {self.d}), "
                f"got array of shape {gens.shape}")
        if np.max(np.abs(gens - np.conj(np.swapaxes(gens, 1, 2)))) > 1e-10:
            raise ValueError("generators must be Hermitian")
        if np.max(np.abs(np.einsum("jaa->j", gens))) > 1e-10:
            raise ValueError("generators must be traceless")
        gram = np.einsum("jab,kba->jk", gens, gens)
        if np.max(np.abs(gram - 2 * np.eye(len(gens)))) > 1e-10:
            raise ValueError("generators must satisfy Tr(S_j S_k) = 2 delta_jk")
        gens.setflags(write=False)
        object.__setattr__(self, "generators", gens)
        if not self.labels:
            object.__setattr__(self, "labels",
                               tuple(f"S{j + 1}" for j in range(len(gens))))
        elif len(self.labels) != len(gens):
            raise ValueError("one label per generator required")

    @property
    def n_axes(self) -> int:
        return self.d**2 - 1

    @property
    def normalization(self) -> float:
        return 2.0

    def __len__(self):
        return self.n_axes

    def __getitem__(self, j):
        return self.generators[j]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def gram(self) -> np.ndarray:
        """Matrix of trace inner products ``Tr(S_j S_k)``."""
        return np.einsum("jab,kba->jk", self.generators, self.generators)


def pauli_basis() -> GeneratorBasis:
    """Pauli matrices ``(sigma_x, sigma_y, sigma_z)``."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return GeneratorBasis(2, np.array([sx, sy, sz]), ("x", "y", "z"))


def gell_mann_basis() -> GeneratorBasis:
    """The eight standard Gell-Mann matrices.

    ``gamma_1..gamma_3`` act as Pauli matrices on the ``|1>, |2>`` block,
    ``gamma_4, gamma_5`` couple ``|1> <-> |3>``, ``gamma_6, gamma_7`` couple
    ``|2> <-> |3>`` and ``gamma_8 = diag(1, 1, -2) / sqrt(3)``.
    """
    g = np.zeros((8, 3, 3), dtype=complex)
    g[0][0, 1] = g[0][1, 0] = 1
    g[1][0, 1], g[1][1, 0] = -1j, 1j
    g[2][0, 0], g[2][1, 1] = 1, -1
    g[3][0, 2] = g[3][2, 0] = 1
    g[4][0, 2], g[4][2, 0] = -1j, 1j
    g[5][1, 2] = g[5][2, 1] = 1
    g[6][1, 2], g[6][2, 1] = -1j, 1j
    g[7] = np.diag([1, 1, -2]) / np.sqrt(3)
    return GeneratorBasis(3, g, tuple(f"g{j}" for j in range(1, 9)))


def generalized_gell_mann_basis(d: int) -> GeneratorBasis:
    """Generalized Gell-Mann basis for arbitrary ``d >= 2``.

    For ``d = 2`` and ``d = 3`` this reproduces :func:`pauli_basis` and
    :func:`gell_mann_basis` (up to the labels).
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    gens = []
    for k in range(1, d):
        for j in range(k):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k], asym[k, j] = -1j, 1j
            gens.append(sym)
            gens.append(asym)
        diag = np.zeros(d)
        diag[:k] = 1
        diag[k] = -k
        gens.append(np.diag(diag * np.sqrt(2 / (k * (k + 1)))).astype(complex))
    return GeneratorBasis(d, np.array(gens))


def basis_for_dimension(d: int) -> GeneratorBasis:
    if d == 2:
        return pauli_basis()
    if d == 3:
        return gell_mann_basis()
    return generalized_gell_mann_basis(d)


def _check_dims(basis: GeneratorBasis, A: np.ndarray):
    if A.shape[-2:] != (basis.d, basis.d):
        raise ValueError(
            f"matrix of shape {A.shape[-2:]} does not match basis dimension {basis.d}")


def trace_coefficient(basis: GeneratorBasis, A, j: int) -> float:
    """Return ``Tr(S_j A) / 2``, the coefficient of ``S_j`` in ``A``."""
    A = np.asarray(A)
    _check_dims(basis, A)
    return float(np.real(np.trace(basis.generators[j] @ A)) / 2)


def expansion_coefficients(basis: GeneratorBasis, A) -> np.ndarray:
    """All coefficients ``Tr(S_j A) / 2``; broadcasts over leading axes of ``A``."""
    A = np.asarray(A)
    _check_dims(basis, A)
    return np.einsum("jab,...ba->...j", basis.generators, A).real / 2


def reconstruct(basis: GeneratorBasis, coefficients, trace: float = 0.0) -> np.ndarray:
    """Inverse of :func:`expansion_coefficients` for Hermitian matrices."""
    c = np.asarray(coefficients, dtype=float)
    eye = np.eye(basis.d) * (trace / basis.d)
    return np.einsum("...j,jab->...ab", c, basis.generators) + eye


def so_adjoint_generators(basis: GeneratorBasis) -> np.ndarray:
    r"""Adjoint-representation generators built from the structure constants.

    ``(sigma_j)_{ik} = Tr([S_i, S_j] S_k) / (4i)``, which for the Pauli basis
    gives the Levi-Civita symbol ``(sigma_j)_{ik} = epsilon_{ijk}``.

    Returns
    -------
    ndarray, shape (n, n, n)
        ``out[j]`` is the real antisymmetric matrix ``sigma_j``.
    """
    S = basis.generators
    # comm[i, j] = [S_i, S_j]
    prod = np.einsum("iab,jbc->ijac", S, S)
    comm = prod - prod.transpose(1, 0, 2, 3)
    f = np.einsum("ijab,kba->ijk", comm, S) / 4j
    if np.max(np.abs(f.imag)) > 1e-10:
        raise ArithmeticError("structure constants are not real")
    # out[j, i, k] = f[i, j, k]
    return np.ascontiguousarray(f.real.transpose(1, 0, 2))

