"""Deterministic evolution channels: rotations, Hamiltonian strokes, and
thermalization of a qubit coupled to a bosonic bath.

Internal units: hbar = 1 and beta = 1, so energies are in units of 1/beta and
times in units of beta*hbar.  The bath acts through jump operators
``sigma_plus`` (absorption) and ``sigma_minus`` (emission) with rates
``gamma * |n(+x)|`` and ``gamma * |n(-x)|`` where ``n`` is the Bose-Einstein
factor and ``x`` is the instantaneous dimensionless gap ``beta * E0 * u`` (a
config switch drops the ``E0`` factor).

The single-qubit Hamiltonian ``u (E0/2) sigma_z`` commutes with the
populations, so they follow a closed two-level rate equation integrated in
closed form, and coherences decay analytically; no time stepping error.  The
two-qubit local-dissipator channel has no such structure and uses fixed-substep
RK4 (substep dt/8) with Simpson's rule for the heat integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import (
    DensityMatrix,
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    bloch_vector,
)

#: Gaps closer to zero than this are rejected outright (the Bose-Einstein
#: factor diverges); environments keep a much wider configurable guard band.
GAP_EPS = 1e-12


class SingularGapError(ValueError):
    """The control u puts the qubit gap too close to zero."""


@dataclass(frozen=True)
class ThermalBathParams:
    """Bath inverse temperature, bare coupling rate, and gap scale.

    ``rate_arg_includes_gap_scale`` selects the argument of the Bose-Einstein
    factor: ``beta * e0 * u`` (default, dimensionally complete) or ``beta * u``.
    """

    beta: float = 1.0
    gamma: float = 1.0
    e0: float = 1.0
    rate_arg_includes_gap_scale: bool = True

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0 or self.e0 <= 0:
            raise ValueError("beta, gamma and e0 must all be positive")

    def rate_argument(self, u: float) -> float:
        scale = self.e0 if self.rate_arg_includes_gap_scale else 1.0
        return self.beta * scale * u


@dataclass(frozen=True)
class TwoQubitParams:
    """Two resonant qubits with exchange coupling of strength g.

    ``variant`` selects the interaction: "no-counter" keeps only the
    excitation-conserving terms ``s+ s- + s- s+`` (perfect swap at
    ``tau_swap``), "counter" uses ``sx sx`` which adds the counter-rotating
    terms.
    """

    e0: float
    g: float
    variant: str = "no-counter"

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("interaction strength g must be positive")
        if self.variant not in ("no-counter", "counter"):
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def tau_swap(self) -> float:
        return math.pi / (2.0 * self.g)

    def interaction(self) -> np.ndarray:
        if self.variant == "no-counter":
            return np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.kron(SIGMA_MINUS, SIGMA_PLUS)
        return np.kron(SIGMA_X, SIGMA_X)


@dataclass(frozen=True)
class RotationAngles:
    """Bloch-sphere rotation angles, normalized to [0, 2*pi)."""

    phi_x: float = 0.0
    phi_y: float = 0.0
    phi_z: float = 0.0

    def normalized(self) -> "RotationAngles":
        tau = 2.0 * math.pi
        return RotationAngles(self.phi_x % tau, self.phi_y % tau, self.phi_z % tau)


def bose_einstein(x: float) -> float:
    """Bose-Einstein factor ``n(x) = 1/(e^x - 1)``.

    Negative for x < 0, with ``|n(-x)| = n(x) + 1``.  Raises
    :class:`SingularGapError` for |x| below ``GAP_EPS``.
    """
    if abs(x) < GAP_EPS:
        raise SingularGapError(f"Bose-Einstein factor diverges at x={x}")
    return 1.0 / math.expm1(x)


def rotation_unitary(phi: RotationAngles) -> np.ndarray:
    """``exp(-i phi.sigma / 2)`` for the rotation vector phi."""
    vec = np.array([phi.phi_x, phi.phi_y, phi.phi_z])
    angle = float(np.linalg.norm(vec))
    if angle < 1e-300:
        return IDENTITY_2.copy()
    axis = vec / angle
    gen = axis[0] * SIGMA_X + axis[1] * SIGMA_Y + axis[2] * SIGMA_Z
    return math.cos(angle / 2) * IDENTITY_2 - 1j * math.sin(angle / 2) * gen


def unitary_rotate(rho: DensityMatrix, phi: RotationAngles) -> DensityMatrix:
    """Conjugate a single-qubit state by the Bloch rotation ``exp(-i phi.sigma/2)``."""
    u = rotation_unitary(phi)
    return DensityMatrix(u @ rho.matrix @ u.conj().T)


def rotate_to_negative_z(rho: DensityMatrix) -> DensityMatrix:
    """Rotate about y so the Bloch vector points along -z.

    Requires a state confined to the x-z plane (|ry| <= 1e-8), which holds for
    every channel in this package.  A zero Bloch vector has no preferred
    direction and maps to itself.
    """
    r = bloch_vector(rho)
    if abs(r.ry) > 1e-8:
        raise ValueError(f"rotate_to_negative_z needs ry ~ 0, got ry={r.ry:.3e}")
    if r.norm < 1e-14:
        return rho
    # R_y(phi) acts on (rx, rz) as rx' = rx cos(phi) + rz sin(phi),
    # rz' = -rx sin(phi) + rz cos(phi); phi below sends (rx, rz) -> (0, -|r|).
    phi = math.atan2(r.rx, -r.rz)
    return unitary_rotate(rho, RotationAngles(phi_y=phi))


def thermal_excited_population(x: float) -> float:
    """Gibbs population of the higher-energy eigenstate at dimensionless gap |x|."""
    return 1.0 / (1.0 + math.exp(abs(x)))


def gibbs_qubit(u: float, bath: ThermalBathParams) -> DensityMatrix:
    """Gibbs state of ``H = u (E0/2) sigma_z`` at the bath temperature."""
    x = bath.beta * bath.e0 * u
    p1 = 1.0 / (1.0 + math.exp(x))  # population of |1> (sigma_z = +1)
    return DensityMatrix(np.diag([1.0 - p1, p1]).astype(complex))


def _thermal_rates(u: float, bath: ThermalBathParams) -> tuple[float, float]:
    """(absorption rate for sigma_plus, emission rate for sigma_minus)."""
    if abs(u) < GAP_EPS:
        raise SingularGapError("thermalization requires a nonzero gap u")
    x = bath.rate_argument(u)
    return bath.gamma * abs(bose_einstein(x)), bath.gamma * abs(bose_einstein(-x))


def lindblad_step(
    rho: DensityMatrix, u: float, dt: float, bath: ThermalBathParams
) -> tuple[DensityMatrix, float]:
    """Thermalize a single qubit for duration dt at constant control u.

    Returns the evolved state and the heat extracted from the bath over the
    step, ``integral Tr[D[rho] H] dt``.  Populations relax exponentially to
    the Gibbs values and coherences decay at half the total rate while
    precessing at the gap frequency; both are exact for constant u.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g_up, g_down = _thermal_rates(u, bath)
    g_tot = g_up + g_down
    p1_star = g_up / g_tot

    m = rho.matrix
    p1 = m[1, 1].real
    decay = math.exp(-g_tot * dt)
    p1_new = p1_star + (p1 - p1_star) * decay

    gap = u * bath.e0
    coh = m[0, 1] * np.exp((1j * gap - 0.5 * g_tot) * dt)

    out = np.array(
        [[1.0 - p1_new, coh], [np.conj(coh), p1_new]], dtype=complex
    )
    heat = gap * (p1_new - p1)
    return DensityMatrix(out), heat


# --- two-qubit channels ----------------------------------------------------

#: Number of RK4 substeps per lindblad_step_main_of_two call.
RK4_SUBSTEPS = 8


def two_qubit_hamiltonian(u: float, params: TwoQubitParams) -> np.ndarray:
    """``u (E0/2)(sz x I + I x sz) + g H_int``."""
    zz = np.kron(SIGMA_Z, IDENTITY_2) + np.kron(IDENTITY_2, SIGMA_Z)
    return u * (params.e0 / 2.0) * zz + params.g * params.interaction()


def two_qubit_unitary_step(
    rho: DensityMatrix, u: float, dt: float, params: TwoQubitParams
) -> DensityMatrix:
    """Exact conjugation by ``exp(-i H dt)`` with H constant over the step."""
    h = two_qubit_hamiltonian(u, params)
    evals, vecs = np.linalg.eigh(h)
    propagator = (vecs * np.exp(-1j * evals * dt)) @ vecs.conj().T
    return DensityMatrix(propagator @ rho.matrix @ propagator.conj().T)


def _main_qubit_liouvillian(u: float, bath: ThermalBathParams):
    """Liouvillian applier for thermalization of the main qubit of a pair."""
    g_up, g_down = _thermal_rates(u, bath)
    h = u * (bath.e0 / 2.0) * np.kron(SIGMA_Z, IDENTITY_2)
    j_up = np.kron(SIGMA_PLUS, IDENTITY_2)
    j_down = np.kron(SIGMA_MINUS, IDENTITY_2)
    n_up = j_up.conj().T @ j_up
    n_down = j_down.conj().T @ j_down

    def dissipator(m: np.ndarray) -> np.ndarray:
        d = g_up * (j_up @ m @ j_up.conj().T - 0.5 * (n_up @ m + m @ n_up))
        d += g_down * (j_down @ m @ j_down.conj().T - 0.5 * (n_down @ m + m @ n_down))
        return d

    def liouvillian(m: np.ndarray) -> np.ndarray:
        return -1j * (h @ m - m @ h) + dissipator(m)

    return h, dissipator, liouvillian


def lindblad_step_main_of_two(
    rho: DensityMatrix, u: float, dt: float, bath: ThermalBathParams
) -> tuple[DensityMatrix, float]:
    """Thermalize the main qubit of a decoupled pair for duration dt.

    The dissipator acts on the main qubit only (jump operators sigma_pm x I);
    the auxiliary qubit is untouched.  Heat is accumulated against the main
    qubit Hamiltonian with Simpson's rule over the RK4 substeps.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    h, dissipator, liouv = _main_qubit_liouvillian(u, bath)

    m = rho.matrix.copy()
    sub = dt / RK4_SUBSTEPS
    # Instantaneous cooling power Tr[D[rho] H] at each substep boundary.
    powers = np.empty(RK4_SUBSTEPS + 1)
    powers[0] = np.trace(dissipator(m) @ h).real
    for i in range(RK4_SUBSTEPS):
        k1 = liouv(m)
        k2 = liouv(m + 0.5 * sub * k1)
        k3 = liouv(m + 0.5 * sub * k2)
        k4 = liouv(m + sub * k3)
        m = m + (sub / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        powers[i + 1] = np.trace(dissipator(m) @ h).real

    heat = _simpson(powers, sub)
    trace_drift = abs(m.trace() - 1.0)
    if trace_drift > 1e-10:
        raise ValueError(f"trace drift {trace_drift:.3e} exceeds guard")
    return DensityMatrix(m), heat


def _simpson(values: np.ndarray, h: float) -> float:
    """Composite Simpson rule over an even number of equal intervals."""
    n = len(values) - 1
    if n % 2 != 0:
        raise ValueError("Simpson's rule needs an even number of intervals")
    total = values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum()
    return float(total * h / 3.0)
