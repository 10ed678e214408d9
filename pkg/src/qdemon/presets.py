"""Named experiment presets: regime parameters from the reference setups and
training hyperparameters scaled to desk-size budgets.

Presets live in ``presets.json`` next to this module.  ``scale_factor`` is
the ratio of the desk step budget to the reference budget and is recorded in
every CSV artifact header.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources

from .dynamics import ThermalBathParams, TwoQubitParams
from .environments import RegimeConfig


class UnknownPresetError(KeyError):
    """Requested preset name does not exist."""


@dataclass(frozen=True)
class Hyperparams:
    steps: int = 40000
    batch_size: int = 256
    adam_lr: float = 1e-3
    sgd_lr: float = 3e-3
    buffer_size: int = 20000
    polyak: float = 0.995
    hidden: tuple[int, int] = (256, 128)
    init_random_steps: int = 2000
    first_update_step: int = 1000
    n_updates: int = 50
    gamma: float = 0.998
    hc_start: float = 0.8
    hc_end: float = -3.0
    hc_decay: float = 15000.0
    hd_start: float = math.log(3.0)
    hd_end: float = 0.01
    hd_decay: float = 7500.0
    eval_every: int = 4000
    eval_steps: int = 3000
    # numpy dtype for network parameters and update arithmetic
    dtype: str = "float64"


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    config: RegimeConfig
    hyper: Hyperparams
    c_list: tuple[float, ...]
    seed_list: tuple[int, ...]
    dt_by_c: dict[float, float] = field(default_factory=dict)
    scale_factor: float = 1.0
    # divide rewards by dt (both terms equally, so the trade-off at any c is
    # untouched); keeps per-step rewards O(power) for the short-dt presets
    rewards_per_time: bool = False

    def config_for(self, c: float, dt: float | None = None) -> RegimeConfig:
        """Regime config at trade-off c, with the per-c time step applied."""
        if dt is None:
            dt = self.dt_by_c.get(c, self.config.dt)
        config = self.config.with_c(c, dt)
        if self.rewards_per_time:
            config = replace(config, power_scale=1.0 / dt, dissipation_scale=1.0 / dt)
        return config


def _build(name: str, raw: dict) -> ExperimentPreset:
    bath = ThermalBathParams(**raw.get("bath", {}))
    tq = raw.get("two_qubit")
    two_qubit = TwoQubitParams(**tq) if tq else None
    config = RegimeConfig(
        regime=raw["regime"],
        c=raw.get("c_default", 1.0),
        dt=raw["dt"],
        bath=bath,
        u_min=raw["u_min"],
        u_max=raw["u_max"],
        u_floor=raw.get("u_floor", 0.05),
        power_scale=raw.get("power_scale", 1.0),
        dissipation_scale=raw.get("dissipation_scale", 1.0),
        kappa=raw.get("kappa", 1.0),
        theta=raw.get("theta", 0.0),
        dt_over_tau_m=raw.get("dt_over_tau_m", 1.0),
        two_qubit=two_qubit,
    )
    hyper_raw = dict(raw.get("hyper", {}))
    if "hidden" in hyper_raw:
        hyper_raw["hidden"] = tuple(hyper_raw["hidden"])
    hyper = Hyperparams(**hyper_raw)
    dt_by_c = {float(k): float(v) for k, v in raw.get("dt_by_c", {}).items()}
    return ExperimentPreset(
        name=name,
        config=config,
        hyper=hyper,
        c_list=tuple(raw.get("c_list", [1.0])),
        seed_list=tuple(raw.get("seed_list", [1])),
        dt_by_c=dt_by_c,
        scale_factor=raw.get("scale_factor", 1.0),
        rewards_per_time=raw.get("rewards_per_time", False),
    )


def _load_raw() -> dict:
    text = resources.files("qdemon").joinpath("presets.json").read_text()
    return json.loads(text)


def _resolve(name: str, table: dict, seen: tuple[str, ...] = ()) -> dict:
    """Flatten the shallow "like" inheritance between preset entries."""
    if name in seen:
        raise ValueError(f"preset inheritance cycle through {name!r}")
    entry = dict(table[name])
    base_name = entry.pop("like", None)
    if base_name is None:
        return entry
    base = _resolve(base_name, table, seen + (name,))
    merged = dict(base)
    merged.update(entry)
    return merged


def preset_names() -> list[str]:
    return sorted(_load_raw()["presets"].keys())


def load_preset(name: str) -> ExperimentPreset:
    raw = _load_raw()["presets"]
    if name not in raw:
        raise UnknownPresetError(
            f"unknown preset {name!r}; available: {', '.join(sorted(raw))}"
        )
    return _build(name, _resolve(name, raw))
