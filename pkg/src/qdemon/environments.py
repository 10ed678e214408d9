"""Markov-decision-process interface over the physical regimes.

Every step lasts one interval dt regardless of the discrete action chosen:
thermalize (bath contact), measure (one measurement channel application), or
unitary (rotation / Hamiltonian stroke / no-op where coherence is irrelevant).
The reward of a step is ``c * power_scale * heat - (1-c) * dissipation_scale *
landauer_cost`` with heat and cost integrated over the step.

Regimes
-------
ThermDominated      slow bath, projective z measurements, unitary is a no-op
                    (the populations are a closed classical sector).
MeasDiscreteFixed   fast full-contact thermalization at fixed gap, discrete
                    weak measurement of a fixed axis, unitary y rotation by
                    the continuous action.
MeasDiscreteAdaptive  as above, but the continuous action is the measurement
                    angle and the unitary rotates the Bloch vector to -z.
MeasContinuous      as above with Gaussian continuous readouts (fixed or
                    adaptive axis); no Landauer cost is defined, so these
                    environments run at c = 1.
MeasPlusTherm       finite-time thermalization with the gap as the continuous
                    action plus continuous z measurements; unitary no-op.
TwoQubit            main qubit thermalizes, auxiliary qubit is measured
                    projectively, unitary evolves both under the coupled
                    Hamiltonian with the gap as the continuous action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Callable, NamedTuple

import numpy as np

from . import dynamics, measurement
from .dynamics import ThermalBathParams, TwoQubitParams
from .linalg import DensityMatrix, projector, tensor_product


class Action(IntEnum):
    UNITARY = 0
    THERMALIZE = 1
    MEASURE = 2


REGIMES = (
    "ThermDominated",
    "MeasDiscreteFixed",
    "MeasDiscreteAdaptive",
    "MeasContinuous",
    "MeasPlusTherm",
    "TwoQubit",
)

#: Regimes whose measurement channel has a defined Landauer cost; only these
#: support dissipation bookkeeping and Pareto trade-offs (c < 1).
DISCRETE_COST_REGIMES = (
    "ThermDominated",
    "MeasDiscreteFixed",
    "MeasDiscreteAdaptive",
    "TwoQubit",
)


@dataclass(frozen=True)
class HybridAction:
    discrete: int
    continuous: float


@dataclass(frozen=True)
class EnvState:
    rho: DensityMatrix
    last_u: float
    step_index: int


@dataclass(frozen=True)
class StepOutcome:
    next: EnvState
    reward: float
    heat: float
    dissipation: float
    measured: bool
    record: measurement.MeasurementRecord | None


@dataclass(frozen=True)
class RegimeConfig:
    regime: str
    c: float = 1.0
    dt: float = 0.1
    bath: ThermalBathParams = field(default_factory=ThermalBathParams)
    u_min: float = -0.8
    u_max: float = 0.8
    u_floor: float = 0.05
    power_scale: float = 1.0
    dissipation_scale: float = 1.0
    # discrete measurement
    kappa: float = 1.0
    # measurement axis angle; None means the angle is the continuous action
    theta: float | None = 0.0
    # continuous measurement strength dt/tau_m
    dt_over_tau_m: float = 1.0
    two_qubit: TwoQubitParams | None = None
    # experimental differential-entropy cost for continuous readouts
    continuous_cost: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError("c must lie in [0, 1]")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.power_scale <= 0 or self.dissipation_scale <= 0:
            raise ValueError("reward scales must be positive")
        if self.regime == "TwoQubit" and self.two_qubit is None:
            raise ValueError("TwoQubit regime needs two_qubit params")
        if self.regime not in DISCRETE_COST_REGIMES and self.c != 1.0 and not self.continuous_cost:
            raise ValueError(
                f"regime {self.regime} has no Landauer cost; only c = 1 is supported"
            )

    @property
    def dim(self) -> int:
        return 4 if self.regime == "TwoQubit" else 2

    @property
    def encoded_length(self) -> int:
        return 2 * self.dim**2 + 1

    def with_c(self, c: float, dt: float | None = None) -> "RegimeConfig":
        return replace(self, c=c, dt=self.dt if dt is None else dt)


def clamp_gap(u: float, config: RegimeConfig) -> float:
    """Keep a gap control out of the singular band around zero."""
    if abs(u) < config.u_floor:
        return config.u_floor if u >= 0.0 else -config.u_floor
    return u


def reset(config: RegimeConfig, rng: np.random.Generator | None = None) -> EnvState:
    """Initial state: Gibbs state of the configured Hamiltonian.

    Single-qubit regimes with a controllable gap start from the Gibbs state at
    u = u_max; fixed-gap regimes start from the Gibbs state at the bare gap
    E0.  The two-qubit regime starts from Gibbs(main at u_max) x |0><0|.
    """
    if config.regime in ("ThermDominated", "MeasPlusTherm"):
        rho = dynamics.gibbs_qubit(config.u_max, config.bath)
    elif config.regime == "TwoQubit":
        main = dynamics.gibbs_qubit(config.u_max, config.bath)
        rho = DensityMatrix(tensor_product(main.matrix, projector(0)))
    else:
        rho = dynamics.gibbs_qubit(1.0, config.bath)
    return EnvState(rho=rho, last_u=0.0, step_index=0)


def step(
    state: EnvState,
    action: HybridAction,
    config: RegimeConfig,
    rng: np.random.Generator,
) -> StepOutcome:
    """Advance the system by one interval dt under the chosen action."""
    d = Action(action.discrete)
    u = float(action.continuous)
    if not config.u_min - 1e-9 <= u <= config.u_max + 1e-9:
        raise ValueError(f"continuous action {u} outside [{config.u_min}, {config.u_max}]")

    heat = 0.0
    dissipation = 0.0
    record = None
    rho = state.rho
    beta = config.bath.beta

    regime = config.regime
    if d is Action.THERMALIZE:
        if regime in ("ThermDominated", "MeasPlusTherm"):
            rho, heat = dynamics.lindblad_step(rho, clamp_gap(u, config), config.dt, config.bath)
        elif regime == "TwoQubit":
            rho, heat = dynamics.lindblad_step_main_of_two(
                rho, clamp_gap(u, config), config.dt, config.bath
            )
        else:
            # full-contact step at the bare gap E0
            rho, heat = dynamics.lindblad_step(rho, 1.0, config.dt, config.bath)
    elif d is Action.MEASURE:
        if regime == "ThermDominated":
            ks = measurement.build_discrete_kraus(1.0, 0.0)
            record, rho = measurement.apply_discrete_measurement(rho, ks, rng, beta)
        elif regime in ("MeasDiscreteFixed", "MeasDiscreteAdaptive"):
            theta = u if config.theta is None else config.theta
            ks = measurement.build_discrete_kraus(config.kappa, theta)
            record, rho = measurement.apply_discrete_measurement(rho, ks, rng, beta)
        elif regime in ("MeasContinuous", "MeasPlusTherm"):
            theta = (u if config.theta is None else config.theta) if regime == "MeasContinuous" else 0.0
            spec = measurement.ContinuousMeasurementSpec(theta, config.dt_over_tau_m)
            record, rho = measurement.sample_continuous_measurement(
                rho, spec, rng, beta, differential_cost=config.continuous_cost
            )
        else:  # TwoQubit
            record, rho = measurement.projective_measure_auxiliary(rho, rng, beta)
        if record.landauer_cost is not None:
            dissipation = record.landauer_cost
    elif d is Action.UNITARY:
        if regime in ("ThermDominated", "MeasPlusTherm"):
            pass  # populations form a closed sector; rotations are null here
        elif regime == "MeasDiscreteFixed":
            rho = dynamics.unitary_rotate(rho, dynamics.RotationAngles(phi_y=u))
        elif regime in ("MeasDiscreteAdaptive", "MeasContinuous"):
            rho = dynamics.rotate_to_negative_z(rho)
        else:  # TwoQubit
            rho = dynamics.two_qubit_unitary_step(rho, u, config.dt, config.two_qubit)
    else:
        raise ValueError(f"invalid discrete action {action.discrete}")

    reward = (
        config.c * config.power_scale * heat
        - (1.0 - config.c) * config.dissipation_scale * dissipation
    )
    nxt = EnvState(rho=rho, last_u=u, step_index=state.step_index + 1)
    return StepOutcome(
        next=nxt,
        reward=reward,
        heat=heat,
        dissipation=dissipation,
        measured=d is Action.MEASURE,
        record=record,
    )


def encode_state(state: EnvState) -> np.ndarray:
    """Flatten to [Re(rho) row-major, Im(rho) row-major, last_u]."""
    m = state.rho.matrix
    return np.concatenate([m.real.ravel(), m.imag.ravel(), [state.last_u]])


def decode_state(vec: np.ndarray, step_index: int = 0) -> EnvState:
    """Inverse of :func:`encode_state`."""
    vec = np.asarray(vec, dtype=float)
    dim = int(round(math.sqrt((len(vec) - 1) / 2)))
    if 2 * dim * dim + 1 != len(vec):
        raise ValueError(f"encoded vector length {len(vec)} is not 2*dim^2+1")
    n = dim * dim
    m = vec[:n].reshape(dim, dim) + 1j * vec[n : 2 * n].reshape(dim, dim)
    return EnvState(rho=DensityMatrix(m), last_u=float(vec[-1]), step_index=step_index)


class Env:
    """Stateful convenience wrapper owning one trajectory."""

    def __init__(self, config: RegimeConfig):
        self.config = config
        self.state: EnvState | None = None

    def reset(self, rng: np.random.Generator | None = None) -> EnvState:
        self.state = reset(self.config, rng)
        return self.state

    def step(self, action: HybridAction, rng: np.random.Generator) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("reset the environment before stepping")
        out = step(self.state, action, self.config, rng)
        self.state = out.next
        return out


class Metrics(NamedTuple):
    avg_power: float
    avg_dissipation: float
    efficiency: float | None


Policy = Callable[[EnvState, np.random.Generator], HybridAction]


def evaluate_policy(
    policy: Policy,
    config: RegimeConfig,
    n_steps: int,
    rng: np.random.Generator,
    burn_in_fraction: float = 0.1,
) -> Metrics:
    """Time-averaged cooling power and dissipation over a long rollout.

    A burn-in prefix is discarded; averages are per unit time over the rest.
    Efficiency is absent (None) when the average dissipation is zero.
    """
    env = Env(config)
    state = env.reset(rng)
    if hasattr(policy, "reset"):
        policy.reset(state)
    burn_in = int(burn_in_fraction * n_steps)
    heat_total = 0.0
    cost_total = 0.0
    kept = 0
    for i in range(n_steps):
        out = env.step(policy(state, rng), rng)
        state = out.next
        if i >= burn_in:
            heat_total += out.heat
            cost_total += out.dissipation
            kept += 1
    span = kept * config.dt
    avg_power = heat_total / span
    avg_dissipation = cost_total / span
    efficiency = avg_power / avg_dissipation if avg_dissipation > 0.0 else None
    return Metrics(avg_power, avg_dissipation, efficiency)


def figure_of_merit(metrics: Metrics, config: RegimeConfig) -> float:
    """``c * power_scale * <P> - (1-c) * dissipation_scale * <D>``."""
    return (
        config.c * config.power_scale * metrics.avg_power
        - (1.0 - config.c) * config.dissipation_scale * metrics.avg_dissipation
    )
