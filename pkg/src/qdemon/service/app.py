"""FastAPI service wrapping the training, baseline, and trace machinery.

Jobs run synchronously in the request handler; training endpoints block until
the run finishes, which suits the in-process client the CLI uses by default
and single-tenant deployments of the service.
"""

from __future__ import annotations

from collections import Counter

from fastapi import FastAPI, HTTPException

from .. import harness
from ..baselines import UnsupportedRegimeError
from ..presets import UnknownPresetError, load_preset, preset_names
from .models import (
    BaselineRequest,
    EvalRequest,
    FrontResponse,
    HealthResponse,
    MetricsModel,
    ParetoRowModel,
    PresetListResponse,
    PresetSummary,
    SweepRequest,
    TraceRequest,
    TraceResponse,
    TrainRequest,
    TrainResponse,
)

API_VERSION = "1"

app = FastAPI(title="qdemon", version=API_VERSION)


def _load_preset_or_400(name: str):
    try:
        return load_preset(name)
    except UnknownPresetError as exc:
        raise HTTPException(status_code=400, detail=str(exc))


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=API_VERSION)


@app.get("/presets", response_model=PresetListResponse)
def presets() -> PresetListResponse:
    out = []
    for name in preset_names():
        p = load_preset(name)
        out.append(
            PresetSummary(
                name=name,
                regime=p.config.regime,
                c_list=list(p.c_list),
                seed_list=list(p.seed_list),
                steps=p.hyper.steps,
                scale_factor=p.scale_factor,
            )
        )
    return PresetListResponse(presets=out)


@app.post("/train", response_model=TrainResponse)
def train(req: TrainRequest) -> TrainResponse:
    preset = _load_preset_or_400(req.preset)
    try:
        result = harness.train_job(
            preset, req.c, req.seed, req.out_dir, req.steps, req.final_eval_steps
        )
    except harness.HarnessError as exc:
        raise HTTPException(status_code=500, detail=str(exc))
    return TrainResponse(
        checkpoint_path=result.checkpoint_path,
        curve_path=result.curve_path,
        metrics=MetricsModel(**result.metrics._asdict()),
        f_c=result.f_c,
        steps=result.steps,
        scale_factor=result.scale_factor,
    )


@app.post("/eval", response_model=MetricsModel)
def evaluate(req: EvalRequest) -> MetricsModel:
    try:
        metrics = harness.evaluate_checkpoint(
            req.checkpoint_path, req.n_steps, req.seed, req.deterministic
        )
    except FileNotFoundError as exc:
        raise HTTPException(status_code=404, detail=f"checkpoint not found: {exc}")
    except harness.CheckpointVersionError as exc:
        raise HTTPException(status_code=409, detail=str(exc))
    return MetricsModel(**metrics._asdict())


@app.post("/sweep", response_model=FrontResponse)
def sweep(req: SweepRequest) -> FrontResponse:
    preset = _load_preset_or_400(req.preset)
    path, rows = harness.sweep(
        preset,
        req.out_dir,
        workers=req.workers,
        c_values=req.c_values,
        seeds=req.seeds,
        steps=req.steps,
        final_eval_steps=req.final_eval_steps,
    )
    return FrontResponse(csv_path=str(path), rows=[ParetoRowModel(**r) for r in rows])


@app.post("/baseline", response_model=FrontResponse)
def baseline(req: BaselineRequest) -> FrontResponse:
    preset = _load_preset_or_400(req.preset)
    try:
        path, rows = harness.baseline_front(preset, req.out_dir, req.c_values)
    except UnsupportedRegimeError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return FrontResponse(csv_path=str(path), rows=[ParetoRowModel(**r) for r in rows])


@app.post("/trace", response_model=TraceResponse)
def trace(req: TraceRequest) -> TraceResponse:
    try:
        path, records = harness.trace(
            req.checkpoint_path, req.n_steps, req.out_file, req.seed, req.stochastic
        )
    except FileNotFoundError as exc:
        raise HTTPException(status_code=404, detail=f"checkpoint not found: {exc}")
    except harness.CheckpointVersionError as exc:
        raise HTTPException(status_code=409, detail=str(exc))
    counts = Counter(r["discrete_action"] for r in records)
    return TraceResponse(
        path=str(path),
        n_records=len(records),
        action_counts=dict(counts),
        mean_consecutive_measurements=harness.mean_consecutive_measurements(
            [r["discrete_action"] for r in records]
        ),
    )
