"""Pydantic request/response models for the scoring service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

Backend = Literal["naive", "svd_optimized", "fixed_point"]
TaskKind = Literal["classification", "regression"]


class HealthResponse(BaseModel):
    status: str
    version: str


class LogmeRequest(BaseModel):
    features_path: str
    labels_path: str
    task_kind: TaskKind
    num_classes: int | None = None
    backend: Backend = "fixed_point"
    dump_head_path: str | None = None
    threads: int | None = Field(default=None, ge=1)


class DimensionSolution(BaseModel):
    dimension: int
    normalized_evidence: float
    log_evidence: float
    alpha: float
    beta: float
    t: float
    gamma: float
    iterations: int
    converged: bool
    guaranteed: bool | None = None


class SkippedDimension(BaseModel):
    dimension: int
    reason: str


class LogmeResponse(BaseModel):
    logme: float
    backend: Backend
    per_dimension: list[DimensionSolution]
    skipped: list[SkippedDimension]
    head_path: str | None = None


class RankRequest(BaseModel):
    manifest_path: str
    top_k: int = Field(default=3, ge=1)
    backend: Backend = "fixed_point"
    threads: int | None = Field(default=None, ge=1)


class RankedModel(BaseModel):
    id: str
    score: float
    rank: int
    truth: float | None = None


class RankResponse(BaseModel):
    dataset: str
    backend: Backend
    models: list[RankedModel]
    tau: float | None
    tau_w: float | None
    tau_note: str | None
    truth_direction: str
    top_k: list[str]


class CurveRequest(BaseModel):
    features_path: str
    labels_path: str
    task_kind: TaskKind
    class_index: int = 0
    num_classes: int | None = None
    t_min: float = Field(default=1e-3, gt=0)
    t_max: float = 1e3
    points: int = Field(default=200, ge=2)


class CurveResponse(BaseModel):
    dimension: int
    rows: list[tuple[float, float]]
    converged_t: float | None
    converged: bool


class VerifyRequest(BaseModel):
    features_path: str
    labels_path: str
    task_kind: TaskKind
    num_classes: int | None = None
    oracle: bool = False
    class_index: int = Field(default=0, ge=0)


class DimensionVerdict(BaseModel):
    dimension: int
    skipped: str | None = None
    rank_condition: bool | None = None
    ordering_statistic: float | None = None
    slope_at_infinity: float | None = None
    limit_at_zero: float | None = None
    guaranteed: bool | None = None


class OracleComparison(BaseModel):
    dimension: int
    iterative: DimensionSolution
    oracle_alpha: float
    oracle_beta: float
    oracle_normalized_evidence: float
    iterative_minus_oracle: float


class VerifyResponse(BaseModel):
    rank: int
    n: int
    dimensions: list[DimensionVerdict]
    oracle_check: OracleComparison | None = None


class BenchRequest(BaseModel):
    n: int = 10000
    dim: int = 1024
    num_classes: int = 100
    backends: list[Backend] = ["naive", "svd_optimized", "fixed_point"]
    repeats: int = Field(default=1, ge=1)
    seed: int = 0
    threads: int | None = Field(default=None, ge=1)


class BackendTiming(BaseModel):
    backend: Backend
    logme: float
    seconds_mean: float
    seconds_min: float
    seconds_max: float
    repeats: int


class BenchResponse(BaseModel):
    n: int
    dim: int
    num_classes: int
    seed: int
    max_disagreement: float
    backends: list[BackendTiming]


class PredictRequest(BaseModel):
    head_path: str
    features_path: str


class PredictResponse(BaseModel):
    model_id: str
    dimensions: list[int]
    means: list[list[float]]
    variances: list[list[float]]


class BtuneRequest(BaseModel):
    config: dict = Field(default_factory=dict)


class BtuneResponse(BaseModel):
    config: dict
    teacher_ids: list[str]
    loss_total: list[float]
    loss_task: list[float]
    loss_reg: list[float]
    final_train_metric: float
    final_test_metric: float
    metric_name: str


class ErrorResponse(BaseModel):
    error: str
    detail: str
