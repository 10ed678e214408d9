"""Experiment orchestration and file artifacts.

Artifacts:

* learning-curve CSV: step, avg_power, avg_dissipation, efficiency, loss_q,
  loss_pi, alpha_d, alpha_c
* pareto CSV (shared by RL sweeps and baseline fronts): source, policy,
  params, c, seed, avg_power, avg_dissipation, efficiency, f_c, error
* trajectory JSON-lines: one record per step with the action, control, state,
  heat, dissipation, reward, and measurement outcome
* checkpoint: numpy archive with all parameters, optimizer moments, buffer
  cursor, temperatures, and the config needed to rebuild the environment

All writes go through a write-temp-then-rename helper, so partially written
files never appear under the final name.  CSV headers carry '#'-prefixed
metadata lines including the desk-scale step budget factor.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import baselines, sac
from .environments import Action, Env, Metrics, RegimeConfig
from .dynamics import ThermalBathParams, TwoQubitParams
from .linalg import bloch_vector, concurrence, partial_trace, purity
from .presets import ExperimentPreset, Hyperparams
from .sac import SacAgent, SacPolicy, TrainingDiverged

CHECKPOINT_VERSION = 1

CURVE_FIELDS = [
    "step",
    "avg_power",
    "avg_dissipation",
    "efficiency",
    "loss_q",
    "loss_pi",
    "alpha_d",
    "alpha_c",
]
PARETO_FIELDS = [
    "source",
    "policy",
    "params",
    "c",
    "seed",
    "avg_power",
    "avg_dissipation",
    "efficiency",
    "f_c",
    "error",
]


class HarnessError(RuntimeError):
    pass


class CheckpointVersionError(HarnessError):
    pass


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        # plain-float repr round-trips exactly and is numpy-scalar proof
        return repr(float(value))
    return str(value)


def write_csv(path: Path, fields: list[str], rows: list[dict], meta: dict) -> None:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}={value}\n")
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in fields})
    atomic_write_text(path, buf.getvalue())


def read_csv(path: Path) -> tuple[dict, list[dict]]:
    meta: dict = {}
    lines = Path(path).read_text().splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value
            body_start = i + 1
        else:
            break
    reader = csv.DictReader(lines[body_start:])
    rows = []
    for raw in reader:
        row: dict = {}
        for key, value in raw.items():
            if value == "" or value is None:
                row[key] = None if key != "error" and key != "params" else value
            elif key in ("step", "seed"):
                row[key] = int(value)
            elif key in ("source", "policy", "params", "error"):
                row[key] = value
            else:
                row[key] = float(value)
        rows.append(row)
    return meta, rows


# --- checkpoints -------------------------------------------------------------


def _config_to_dict(config: RegimeConfig) -> dict:
    d = asdict(config)
    return d


def _config_from_dict(d: dict) -> RegimeConfig:
    d = dict(d)
    d["bath"] = ThermalBathParams(**d["bath"])
    if d.get("two_qubit"):
        d["two_qubit"] = TwoQubitParams(**d["two_qubit"])
    return RegimeConfig(**d)


def save_checkpoint(
    path: Path,
    agent: SacAgent,
    config: RegimeConfig,
    extra_meta: dict | None = None,
) -> None:
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": _config_to_dict(config),
        "hyper": asdict(agent.hyper),
        "state_dim": agent.state_dim,
        "u_bounds": [agent.u_lo, agent.u_hi],
        "beta_d": agent.temps.beta_d,
        "beta_c": agent.temps.beta_c,
        "updates_done": agent.updates_done,
    }
    meta.update(extra_meta or {})
    arrays: dict[str, np.ndarray] = {}
    for name, params in (
        ("policy", agent.policy),
        ("critics", agent.critics),
        ("targets", agent.targets),
    ):
        for i, (w, b) in enumerate(params):
            arrays[f"{name}_{i}_w"] = w
            arrays[f"{name}_{i}_b"] = b
    for name, adam in (("adam_p", agent.adam_policy), ("adam_q", agent.adam_critics)):
        for key, arr in adam.state_arrays().items():
            arrays[f"{name}_{key}"] = arr
    buf = io.BytesIO()
    np.savez_compressed(buf, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)
    atomic_write_bytes(path, buf.getvalue())


def load_checkpoint(path: Path) -> tuple[SacAgent, RegimeConfig, dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointVersionError(
                f"checkpoint version {meta.get('version')} != supported {CHECKPOINT_VERSION}"
            )
        config = _config_from_dict(meta["config"])
        hyper = Hyperparams(**{**meta["hyper"], "hidden": tuple(meta["hyper"]["hidden"])})
        agent = SacAgent(meta["state_dim"], tuple(meta["u_bounds"]), hyper, np.random.default_rng(0))
        for name, params in (
            ("policy", agent.policy),
            ("critics", agent.critics),
            ("targets", agent.targets),
        ):
            for i, (w, b) in enumerate(params):
                w[...] = data[f"{name}_{i}_w"]
                b[...] = data[f"{name}_{i}_b"]
        agent.temps.beta_d = meta["beta_d"]
        agent.temps.beta_c = meta["beta_c"]
        agent.updates_done = meta["updates_done"]
    return agent, config, meta


# --- training jobs -----------------------------------------------------------


@dataclass
class TrainResult:
    checkpoint_path: str
    curve_path: str
    metrics: Metrics
    f_c: float
    steps: int
    scale_factor: float


def _f_c(metrics: Metrics, config: RegimeConfig) -> float:
    return (
        config.c * config.power_scale * metrics.avg_power
        - (1.0 - config.c) * config.dissipation_scale * metrics.avg_dissipation
    )


def train_job(
    preset: ExperimentPreset,
    c: float,
    seed: int,
    out_dir: Path,
    steps: int | None = None,
    final_eval_steps: int = 40000,
) -> TrainResult:
    """Train one agent, write its checkpoint and learning-curve CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = preset.config_for(c)
    hyper = preset.hyper if steps is None else replace(preset.hyper, steps=steps)

    tag = f"{preset.name}_c{c:g}_s{seed}"
    curve_path = out_dir / f"curves_{tag}.csv"
    ckpt_path = out_dir / f"ckpt_{tag}.npz"

    try:
        agent, curves, run_info = sac.train(config, hyper, seed)
    except TrainingDiverged as exc:
        dump_path = out_dir / f"diverged_{tag}.json"
        atomic_write_text(dump_path, json.dumps(exc.diagnostics, indent=2))
        raise HarnessError(f"training diverged; diagnostics at {dump_path}") from exc

    rows = [
        {k: getattr(r, k) for k in CURVE_FIELDS}
        for r in curves
    ]
    meta = {
        "artifact": "learning-curve",
        "preset": preset.name,
        "c": c,
        "seed": seed,
        "steps": hyper.steps,
        "scale_factor": preset.scale_factor,
    }
    write_csv(curve_path, CURVE_FIELDS, rows, meta)

    metrics = sac.final_metrics(agent, config, final_eval_steps, seed)
    save_checkpoint(
        ckpt_path, agent, config, {"preset": preset.name, "c": c, "seed": seed, **run_info}
    )
    return TrainResult(
        checkpoint_path=str(ckpt_path),
        curve_path=str(curve_path),
        metrics=metrics,
        f_c=_f_c(metrics, config),
        steps=hyper.steps,
        scale_factor=preset.scale_factor,
    )


def _sweep_worker(args: tuple) -> dict:
    preset, c, seed, out_dir, steps, final_eval_steps = args
    try:
        result = train_job(preset, c, seed, Path(out_dir), steps, final_eval_steps)
        return {
            "source": "rl",
            "policy": "sac",
            "params": "",
            "c": c,
            "seed": seed,
            "avg_power": result.metrics.avg_power,
            "avg_dissipation": result.metrics.avg_dissipation,
            "efficiency": result.metrics.efficiency,
            "f_c": result.f_c,
            "error": "",
        }
    except Exception as exc:  # partial failures are recorded, sweep continues
        return {
            "source": "rl",
            "policy": "sac",
            "params": "",
            "c": c,
            "seed": seed,
            "avg_power": None,
            "avg_dissipation": None,
            "efficiency": None,
            "f_c": None,
            "error": str(exc),
        }


def sweep(
    preset: ExperimentPreset,
    out_dir: Path,
    workers: int = 1,
    c_values: list[float] | None = None,
    seeds: list[int] | None = None,
    steps: int | None = None,
    final_eval_steps: int = 40000,
) -> tuple[Path, list[dict]]:
    """Train every (c, seed) pair; keep the best seed per c by F_c."""
    out_dir = Path(out_dir)
    cs = list(c_values if c_values is not None else preset.c_list)
    seed_list = list(seeds if seeds is not None else preset.seed_list)
    jobs = [
        (preset, c, seed, str(out_dir), steps, final_eval_steps)
        for c in cs
        for seed in seed_list
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]

    best: dict[float, dict] = {}
    failures = [r for r in results if r["error"]]
    for row in results:
        if row["error"]:
            continue
        cur = best.get(row["c"])
        if cur is None or row["f_c"] > cur["f_c"]:
            best[row["c"]] = row
    rows = [best[c] for c in sorted(best, reverse=True)] + failures

    path = out_dir / f"pareto_{preset.name}.csv"
    meta = {
        "artifact": "pareto",
        "preset": preset.name,
        "scale_factor": preset.scale_factor,
        "seeds": ",".join(str(s) for s in seed_list),
    }
    write_csv(path, PARETO_FIELDS, rows, meta)
    return path, rows


def baseline_front(
    preset: ExperimentPreset,
    out_dir: Path,
    c_values: list[float] | None = None,
) -> tuple[Path, list[dict]]:
    """Grid-optimize the applicable interpretable policy for each c."""
    out_dir = Path(out_dir)
    cs = list(c_values if c_values is not None else preset.c_list)
    rows = []
    for c in cs:
        config = preset.config_for(c)
        name, policy, metrics, f_c = baselines.optimize_for_regime(config)
        rows.append(
            {
                "source": "baseline",
                "policy": name,
                "params": json.dumps(asdict(policy)),
                "c": c,
                "seed": 0,
                "avg_power": metrics.avg_power,
                "avg_dissipation": metrics.avg_dissipation,
                "efficiency": metrics.efficiency,
                "f_c": f_c,
                "error": "",
            }
        )
    path = out_dir / f"baseline_{preset.name}.csv"
    meta = {"artifact": "baseline-pareto", "preset": preset.name, "scale_factor": preset.scale_factor}
    write_csv(path, PARETO_FIELDS, rows, meta)
    return path, rows


# --- tracing and evaluation ---------------------------------------------------


def trace(
    checkpoint_path: Path,
    n_steps: int,
    out_file: Path,
    seed: int = 7,
    stochastic: bool = False,
) -> tuple[Path, list[dict]]:
    """Write a JSON-lines trajectory of the checkpointed policy.

    Actions default to the policy mode (deterministic); measurement outcomes
    remain stochastic under the given seed.
    """
    agent, config, _ = load_checkpoint(checkpoint_path)
    policy = SacPolicy(agent, deterministic=not stochastic)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7ACE]))
    env = Env(config)
    state = env.reset(rng)
    records = []
    for i in range(n_steps):
        action = policy(state, rng)
        out = env.step(action, rng)
        rho = out.next.rho
        rec = {
            "step": i,
            "discrete_action": Action(action.discrete).name.lower(),
            "u": action.continuous,
            "rho_flat": [float(x) for x in np.concatenate([rho.matrix.real.ravel(), rho.matrix.imag.ravel()])],
            "heat": out.heat,
            "dissipation": out.dissipation,
            "reward": out.reward,
            "outcome": None if out.record is None else out.record.outcome,
        }
        if config.dim == 2:
            r = bloch_vector(rho)
            rec["bloch_x"], rec["bloch_z"] = r.rx, r.rz
            rec["purity"] = purity(rho)
        else:
            main = partial_trace(rho, "main")
            r = bloch_vector(main)
            rec["bloch_x"], rec["bloch_z"] = r.rx, r.rz
            rec["concurrence"] = concurrence(rho)
            rec["purity"] = purity(main)
        records.append(rec)
        state = out.next

    text = "".join(json.dumps(rec) + "\n" for rec in records)
    atomic_write_text(Path(out_file), text)
    return Path(out_file), records


def read_trajectory(path: Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line]


def evaluate_checkpoint(
    checkpoint_path: Path,
    n_steps: int = 20000,
    seed: int = 123,
    deterministic: bool = False,
) -> Metrics:
    agent, config, _ = load_checkpoint(checkpoint_path)
    return sac.final_metrics(agent, config, n_steps, seed, deterministic)


def mean_consecutive_measurements(actions: list[str]) -> float:
    """Average length of maximal runs of measure actions."""
    runs = []
    current = 0
    for a in actions:
        if a == "measure":
            current += 1
        elif current:
            runs.append(current)
            current = 0
    if current:
        runs.append(current)
    return float(np.mean(runs)) if runs else 0.0
