"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class PresetSummary(BaseModel):
    name: str
    regime: str
    c_list: list[float]
    seed_list: list[int]
    steps: int
    scale_factor: float


class PresetListResponse(BaseModel):
    presets: list[PresetSummary]


class MetricsModel(BaseModel):
    avg_power: float
    avg_dissipation: float
    efficiency: float | None = None


class TrainRequest(BaseModel):
    preset: str
    c: float = Field(1.0, ge=0.0, le=1.0)
    seed: int = 1
    steps: int | None = Field(None, gt=0)
    final_eval_steps: int = Field(40000, gt=0)
    out_dir: str


class TrainResponse(BaseModel):
    checkpoint_path: str
    curve_path: str
    metrics: MetricsModel
    f_c: float
    steps: int
    scale_factor: float


class EvalRequest(BaseModel):
    checkpoint_path: str
    n_steps: int = Field(20000, gt=0)
    seed: int = 123
    deterministic: bool = False


class ParetoRowModel(BaseModel):
    source: str
    policy: str
    params: str = ""
    c: float
    seed: int
    avg_power: float | None = None
    avg_dissipation: float | None = None
    efficiency: float | None = None
    f_c: float | None = None
    error: str = ""


class SweepRequest(BaseModel):
    preset: str
    out_dir: str
    workers: int = Field(1, ge=1)
    c_values: list[float] | None = None
    seeds: list[int] | None = None
    steps: int | None = Field(None, gt=0)
    final_eval_steps: int = Field(40000, gt=0)


class BaselineRequest(BaseModel):
    preset: str
    out_dir: str
    c_values: list[float] | None = None


class FrontResponse(BaseModel):
    csv_path: str
    rows: list[ParetoRowModel]


class TraceRequest(BaseModel):
    checkpoint_path: str
    n_steps: int = Field(2000, gt=0)
    out_file: str
    seed: int = 7
    stochastic: bool = False


class TraceResponse(BaseModel):
    path: str
    n_records: int
    action_counts: dict[str, int]
    mean_consecutive_measurements: float
