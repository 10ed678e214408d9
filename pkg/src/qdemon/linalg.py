"""Dense complex linear algebra for one- and two-qubit states.

Basis convention: computational basis ``|0>, |1>`` with ``sigma_z |1> = +|1>``,
so ``sigma_z = diag(-1, +1)`` and the ground state of a Hamiltonian
``u (E0/2) sigma_z`` with ``u > 0`` is ``|0>`` (Bloch z-component -1).
Two-qubit basis ordering is ``|ma>`` with the main qubit first, index
``2*m + a``.

All operations are pure functions over immutable values and are safe to call
from any number of threads.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

# Pauli matrices in the convention above.  They satisfy the usual algebra
# [sx, sy] = 2i sz (cyclic); sy differs from the textbook matrix only by the
# basis relabeling that puts the sigma_z = -1 eigenstate at index 0.
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)  # |1><0|
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
IDENTITY_2 = np.eye(2, dtype=complex)
IDENTITY_4 = np.eye(4, dtype=complex)

#: Tolerance below which invariant violations are considered clean.
STATE_TOL = 1e-10
#: Violations in [STATE_TOL, REPAIR_TOL] are repaired (hermitize + renormalize);
#: larger ones are hard errors.
REPAIR_TOL = 1e-6


class InvalidStateError(ValueError):
    """A matrix failed the density-matrix invariants beyond repair."""


class DimensionError(ValueError):
    """An operation received a matrix of unsupported dimension."""


class BlochVector(NamedTuple):
    """Single-qubit Bloch components ``r_i = Tr[rho sigma_i]``."""

    rx: float
    ry: float
    rz: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.rx**2 + self.ry**2 + self.rz**2))


def _check_dim(m: np.ndarray) -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    if dim not in (2, 4):
        raise DimensionError(f"supported dimensions are 2 and 4, got {dim}")
    return dim


class DensityMatrix:
    """Validated Hermitian, unit-trace, positive-semidefinite matrix.

    The constructor enforces the invariants with tolerance ``STATE_TOL``;
    violations up to ``REPAIR_TOL`` are repaired by hermitization
    ``(rho + rho^dag)/2`` and trace renormalization, anything larger raises
    :class:`InvalidStateError`.  Instances are immutable; ``matrix`` returns
    a read-only view.
    """

    __slots__ = ("_m", "dim")

    def __init__(self, matrix: np.ndarray):
        m = np.array(matrix, dtype=complex)
        self.dim = _check_dim(m)

        herm_err = float(np.max(np.abs(m - m.conj().T)))
        trace_err = abs(m.trace() - 1.0)
        if herm_err > REPAIR_TOL or trace_err > REPAIR_TOL:
            raise InvalidStateError(
                f"state beyond repair: hermiticity error {herm_err:.3e}, "
                f"trace error {trace_err:.3e}"
            )
        if herm_err > STATE_TOL or trace_err > STATE_TOL:
            m = 0.5 * (m + m.conj().T)
            m = m / m.trace().real

        min_eig = float(eigenvalues_hermitian(m)[0])
        if min_eig < -REPAIR_TOL:
            raise InvalidStateError(f"negative eigenvalue {min_eig:.3e}")
        if min_eig < -STATE_TOL:
            # Hermitization cannot fix spectrum drift this large on its own.
            raise InvalidStateError(f"positivity violated: min eigenvalue {min_eig:.3e}")

        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def _as_matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two operators, total dimension at most 4."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] * b.shape[0] > 4:
        raise DimensionError(
            f"tensor product dimension {a.shape[0] * b.shape[0]} exceeds 4"
        )
    return np.kron(a, b)


def partial_trace(rho, keep: str = "main") -> DensityMatrix:
    """Reduce a two-qubit state to one of its qubits.

    Parameters
    ----------
    rho : DensityMatrix or array, dim 4
    keep : "main" (first tensor factor) or "auxiliary" (second factor)
    """
    m = _as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"partial_trace needs a 4x4 state, got {m.shape}")
    t = m.reshape(2, 2, 2, 2)
    if keep == "main":
        red = np.einsum("ikjk->ij", t)
    elif keep == "auxiliary":
        red = np.einsum("kikj->ij", t)
    else:
        raise ValueError(f"keep must be 'main' or 'auxiliary', got {keep!r}")
    return DensityMatrix(red)


def bloch_vector(rho) -> BlochVector:
    """Bloch components of a single-qubit state."""
    m = _as_matrix(rho)
    if m.shape != (2, 2):
        raise DimensionError(f"bloch_vector needs a 2x2 state, got {m.shape}")
    return BlochVector(
        rx=float(np.trace(m @ SIGMA_X).real),
        ry=float(np.trace(m @ SIGMA_Y).real),
        rz=float(np.trace(m @ SIGMA_Z).real),
    )


def bloch_state(rx: float, ry: float, rz: float) -> DensityMatrix:
    """Single-qubit state with the given Bloch components."""
    m = 0.5 * (IDENTITY_2 + rx * SIGMA_X + ry * SIGMA_Y + rz * SIGMA_Z)
    return DensityMatrix(m)


def purity(rho) -> float:
    """``Tr[rho^2]``, in ``[1/dim, 1]`` for valid states."""
    m = _as_matrix(rho)
    return float(np.trace(m @ m).real)


def eigenvalues_hermitian(m) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, ascending.

    Raises if the input is visibly non-Hermitian (tolerance ``REPAIR_TOL``).
    """
    a = _as_matrix(m)
    if float(np.max(np.abs(a - a.conj().T))) > REPAIR_TOL:
        raise ValueError("eigenvalues_hermitian requires a Hermitian matrix")
    return np.linalg.eigvalsh(a)


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state, in [0, 1].

    ``C = max(0, l1 - l2 - l3 - l4)`` where ``l_i`` are the decreasingly
    sorted square roots of the eigenvalues of
    ``rho (sy x sy) rho* (sy x sy)``.
    """
    m = _as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"concurrence needs a 4x4 state, got {m.shape}")
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    r = m @ yy @ m.conj() @ yy
    # r is similar to a positive matrix; eigenvalues are real >= 0 up to noise
    eigs = np.linalg.eigvals(r).real
    eigs = np.sqrt(np.clip(eigs, 0.0, None))
    eigs[::-1].sort()
    return float(max(0.0, eigs[0] - eigs[1] - eigs[2] - eigs[3]))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    evals, vecs = np.linalg.eigh(a)
    sqrt_a = (vecs * np.sqrt(np.clip(evals, 0.0, None))) @ vecs.conj().T
    inner = sqrt_a @ b @ sqrt_a
    ieigs = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(np.sum(np.sqrt(ieigs)) ** 2)


def projector(index: int, dim: int = 2) -> np.ndarray:
    """Projector onto computational basis state ``index``."""
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p
