"""Quantum measurement channels and erasure-cost accounting.

Discrete weak measurements of ``sigma_theta = cos(theta) sz + sin(theta) sx``
use the two-operator Kraus family parameterized by a strength kappa in
[1/2, 1]; kappa = 1/2 is the identity channel and kappa = 1 is projective.
Continuous weak measurements use the Gaussian Kraus family whose readout is a
two-Gaussian mixture with means +-1 and variance tau_m/dt.  Measuring the
auxiliary qubit of a pair is a projective z measurement on the second tensor
factor.

Outcome records carry the Landauer cost of erasing the stored outcome,
``S[{p_k}]/beta``; it is undefined for continuous readouts (differential
entropy can be negative) and reported as None unless the experimental
differential-entropy estimate is requested explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import DensityMatrix, IDENTITY_2, SIGMA_X, SIGMA_Z, bloch_vector, projector

#: Outcome probabilities are clamped here before normalizing post-measurement
#: states, so near-pure states cannot divide by zero.
PROB_CLAMP = 1e-15


def sigma_axis(theta: float) -> np.ndarray:
    """Measurement observable ``cos(theta) sigma_z + sin(theta) sigma_x``."""
    return math.cos(theta) * SIGMA_Z + math.sin(theta) * SIGMA_X


@dataclass(frozen=True)
class MeasurementRecord:
    """One sampled measurement outcome.

    ``outcome`` is +-1 for discrete two-outcome channels, 0/1 for the
    auxiliary-qubit projective channel, and a real readout for continuous
    channels.  ``probability_or_density`` is the Born probability (density in
    the continuous case) of that outcome.  ``landauer_cost`` is the erasure
    work in energy units, or None where the cost is undefined.
    """

    outcome: float
    probability_or_density: float
    landauer_cost: float | None


@dataclass(frozen=True)
class DiscreteKrausSet:
    kappa: float
    theta: float
    m_plus: np.ndarray
    m_minus: np.ndarray


def build_discrete_kraus(kappa: float, theta: float) -> DiscreteKrausSet:
    """Kraus pair ``M_pm = a I_2 +- b sigma_theta`` with
    ``a = (sqrt(k) + sqrt(1-k))/2`` and ``b = (sqrt(k) - sqrt(1-k))/2``.

    Completeness ``M+^dag M+ + M-^dag M- = I`` holds algebraically since
    ``a^2 + b^2 = 1/2``.
    """
    if not 0.5 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [1/2, 1], got {kappa}")
    a = 0.5 * (math.sqrt(kappa) + math.sqrt(1.0 - kappa))
    b = 0.5 * (math.sqrt(kappa) - math.sqrt(1.0 - kappa))
    axis = sigma_axis(theta)
    return DiscreteKrausSet(kappa, theta, a * IDENTITY_2 + b * axis, a * IDENTITY_2 - b * axis)


def landauer_cost(probabilities, beta: float) -> float:
    """Minimum erasure work ``S[{p_k}] / beta`` (Shannon entropy in nats)."""
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-10:
        raise ValueError(f"probabilities must sum to 1, got {p.sum()}")
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum()) / beta


def apply_discrete_measurement(
    rho: DensityMatrix, ks: DiscreteKrausSet, rng: np.random.Generator, beta: float = 1.0
) -> tuple[MeasurementRecord, DensityMatrix]:
    """Sample a discrete weak measurement outcome and collapse the state.

    Outcome +-1 occurs with ``p_pm = Tr[rho M_pm^dag M_pm]``; the state updates
    to ``M rho M^dag / p`` and the record carries the Landauer cost of the
    outcome distribution.
    """
    m = rho.matrix
    p_plus = float(np.trace(ks.m_plus.conj().T @ ks.m_plus @ m).real)
    p_plus = min(max(p_plus, 0.0), 1.0)
    p_minus = 1.0 - p_plus
    cost = landauer_cost([p_plus, p_minus], beta)

    if rng.random() < p_plus:
        op, p, outcome = ks.m_plus, p_plus, 1.0
    else:
        op, p, outcome = ks.m_minus, p_minus, -1.0
    p = max(p, PROB_CLAMP)
    post = op @ m @ op.conj().T / p
    post = post / post.trace().real
    return MeasurementRecord(outcome, p, cost), DensityMatrix(post)


@dataclass(frozen=True)
class ContinuousMeasurementSpec:
    """Continuous measurement of sigma_theta with strength dt/tau_m.

    The readout k is distributed as the mixture
    ``p+ N(+1, tau_m/dt) + p- N(-1, tau_m/dt)`` with
    ``p_pm = Tr[rho (I +- sigma_theta)/2]``.
    """

    theta: float
    dt_over_tau_m: float

    def __post_init__(self):
        if self.dt_over_tau_m <= 0:
            raise ValueError("dt_over_tau_m must be positive")

    @property
    def readout_variance(self) -> float:
        return 1.0 / self.dt_over_tau_m


def continuous_kraus_operator(k: float, spec: ContinuousMeasurementSpec) -> np.ndarray:
    """``M_k = (dt/(2 pi tau_m))^(1/4) exp(-dt (k I - sigma_theta)^2 / (4 tau_m))``."""
    s = spec.dt_over_tau_m
    axis = sigma_axis(spec.theta)
    diff = k * IDENTITY_2 - axis
    evals, vecs = np.linalg.eigh(diff @ diff)
    exp_part = (vecs * np.exp(-s * evals / 4.0)) @ vecs.conj().T
    return (s / (2.0 * math.pi)) ** 0.25 * exp_part


def sample_continuous_measurement(
    rho: DensityMatrix,
    spec: ContinuousMeasurementSpec,
    rng: np.random.Generator,
    beta: float = 1.0,
    differential_cost: bool = False,
) -> tuple[MeasurementRecord, DensityMatrix]:
    """Sample a continuous readout and apply the Gaussian Kraus update.

    The mixture sampling is exact for a single step, so no stochastic master
    equation discretization is involved.  ``differential_cost`` enables an
    experimental differential-entropy Landauer estimate (can be negative and
    is excluded from the standard bookkeeping); otherwise the cost is None.
    """
    m = rho.matrix
    axis = sigma_axis(spec.theta)
    p_plus = float(np.trace((IDENTITY_2 + axis) @ m).real) / 2.0
    p_plus = min(max(p_plus, 0.0), 1.0)
    mean = 1.0 if rng.random() < p_plus else -1.0
    sigma = math.sqrt(spec.readout_variance)
    k = mean + sigma * rng.standard_normal()

    kraus = continuous_kraus_operator(k, spec)
    weighted = kraus @ m @ kraus.conj().T
    density = max(float(weighted.trace().real), PROB_CLAMP)
    post = weighted / density

    cost = _differential_cost(p_plus, sigma, beta) if differential_cost else None
    return MeasurementRecord(k, density, cost), DensityMatrix(post)


def _differential_cost(p_plus: float, sigma: float, beta: float) -> float:
    """Differential entropy of the two-Gaussian readout mixture, over beta."""
    grid = np.linspace(-1.0 - 8.0 * sigma, 1.0 + 8.0 * sigma, 4001)
    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    pdf = p_plus * norm * np.exp(-((grid - 1.0) ** 2) / (2 * sigma**2))
    pdf += (1.0 - p_plus) * norm * np.exp(-((grid + 1.0) ** 2) / (2 * sigma**2))
    mask = pdf > 1e-300
    entropy = -np.trapezoid(np.where(mask, pdf * np.log(np.where(mask, pdf, 1.0)), 0.0), grid)
    return float(entropy) / beta


def projective_measure_auxiliary(
    rho: DensityMatrix, rng: np.random.Generator, beta: float = 1.0
) -> tuple[MeasurementRecord, DensityMatrix]:
    """Projective z measurement of the auxiliary (second) qubit of a pair."""
    m = rho.matrix
    projs = [np.kron(IDENTITY_2, projector(i)) for i in (0, 1)]
    p0 = float(np.trace(projs[0] @ m).real)
    p0 = min(max(p0, 0.0), 1.0)
    probs = [p0, 1.0 - p0]
    cost = landauer_cost(probs, beta)

    outcome = 0 if rng.random() < p0 else 1
    p = max(probs[outcome], PROB_CLAMP)
    post = projs[outcome] @ m @ projs[outcome] / p
    post = post / post.trace().real
    return MeasurementRecord(float(outcome), probs[outcome], cost), DensityMatrix(post)


def average_post_measurement_purity(rho: DensityMatrix, kappa: float, theta: float) -> float:
    """Closed-form outcome-averaged purity after one discrete measurement.

    For a state in the x-z plane with Bloch vector r and measurement axis n,
    ``1 - (1 - l^2)(1 - |r|^2) / (2 (1 - l^2 (r.n)^2))`` with ``l = 2k - 1``.
    Equals the probability-weighted two-branch purity; maximized over the
    angle exactly when the axis is perpendicular to r.
    """
    if not 0.5 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [1/2, 1], got {kappa}")
    r = bloch_vector(rho)
    if abs(r.ry) > 1e-8:
        raise ValueError(f"closed form requires ry ~ 0, got ry={r.ry:.3e}")
    ell = 2.0 * kappa - 1.0
    r_sq = r.rx**2 + r.rz**2
    r_dot_n = r.rx * math.sin(theta) + r.rz * math.cos(theta)
    return 1.0 - 0.5 * (1.0 - ell**2) * (1.0 - r_sq) / (1.0 - ell**2 * r_dot_n**2)
