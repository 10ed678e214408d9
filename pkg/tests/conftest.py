import numpy as np
import pytest

from qdemon.linalg import DensityMatrix


def random_density_matrix(rng: np.random.Generator, dim: int) -> DensityMatrix:
    """Ginibre-sampled full-rank state."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = a @ a.conj().T
    return DensityMatrix(m / m.trace())


def random_xz_state(rng: np.random.Generator, max_radius: float = 0.999) -> DensityMatrix:
    """Qubit state confined to the x-z plane of the Bloch sphere."""
    from qdemon.linalg import bloch_state

    radius = rng.uniform(0.0, max_radius)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    return bloch_state(radius * np.sin(angle), 0.0, radius * np.cos(angle))


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-ish unitary from the QR decomposition of a Ginibre matrix."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
