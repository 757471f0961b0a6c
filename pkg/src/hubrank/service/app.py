"""FastAPI application exposing the scoring engine.

The service runs next to the feature store: requests reference files by
server-local path, compute happens synchronously in the worker, and every
response is a plain JSON document.  The CLI is a thin client of exactly
these endpoints.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, ops
from ..errors import DegenerateLabelsError, DomainError, FormatError, HubrankError, InputError
from ..tuning import TrainingDiverged
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(
        title="hubrank",
        version=__version__,
        description="Evidence-based transferability scoring and ranking of model hubs.",
    )

    @app.exception_handler(HubrankError)
    async def hubrank_error(request: Request, exc: HubrankError) -> JSONResponse:
        status = 422 if isinstance(exc, (InputError, DomainError, FormatError)) else 409
        if isinstance(exc, (DegenerateLabelsError, TrainingDiverged)):
            status = 409
        return JSONResponse(
            status_code=status,
            content=schemas.ErrorResponse(error=type(exc).__name__, detail=str(exc)).model_dump(),
        )

    @app.exception_handler(FileNotFoundError)
    async def missing_file(request: Request, exc: FileNotFoundError) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content=schemas.ErrorResponse(error="FileNotFoundError", detail=str(exc)).model_dump(),
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/logme", response_model=schemas.LogmeResponse)
    def logme_endpoint(request: schemas.LogmeRequest) -> schemas.LogmeResponse:
        result = ops.score_features(
            features_path=request.features_path,
            labels_path=request.labels_path,
            task_kind=request.task_kind,
            num_classes=request.num_classes,
            backend=request.backend,
            dump_head_path=request.dump_head_path,
            threads=request.threads,
        )
        return schemas.LogmeResponse(**result)

    @app.post("/rank", response_model=schemas.RankResponse)
    def rank_endpoint(request: schemas.RankRequest) -> schemas.RankResponse:
        result = ops.rank_manifest(
            manifest_path=request.manifest_path,
            top_k=request.top_k,
            backend=request.backend,
            threads=request.threads,
        )
        return schemas.RankResponse(**result)

    @app.post("/curve", response_model=schemas.CurveResponse)
    def curve_endpoint(request: schemas.CurveRequest) -> schemas.CurveResponse:
        result = ops.fixed_point_curve(
            features_path=request.features_path,
            labels_path=request.labels_path,
            task_kind=request.task_kind,
            class_index=request.class_index,
            num_classes=request.num_classes,
            t_min=request.t_min,
            t_max=request.t_max,
            points=request.points,
        )
        return schemas.CurveResponse(**result)

    @app.post("/verify", response_model=schemas.VerifyResponse)
    def verify_endpoint(request: schemas.VerifyRequest) -> schemas.VerifyResponse:
        result = ops.verify_convergence(
            features_path=request.features_path,
            labels_path=request.labels_path,
            task_kind=request.task_kind,
            num_classes=request.num_classes,
            oracle=request.oracle,
            class_index=request.class_index,
        )
        return schemas.VerifyResponse(**result)

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench_endpoint(request: schemas.BenchRequest) -> schemas.BenchResponse:
        result = ops.run_bench(
            n=request.n,
            dim=request.dim,
            num_classes=request.num_classes,
            backends=tuple(request.backends),
            repeats=request.repeats,
            seed=request.seed,
            threads=request.threads,
        )
        return schemas.BenchResponse(**result)

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict_endpoint(request: schemas.PredictRequest) -> schemas.PredictResponse:
        result = ops.predict_from_head(
            head_path=request.head_path, features_path=request.features_path
        )
        return schemas.PredictResponse(**result)

    @app.post("/btune", response_model=schemas.BtuneResponse)
    def btune_endpoint(request: schemas.BtuneRequest) -> schemas.BtuneResponse:
        result = ops.run_toy_tuning(request.config)
        return schemas.BtuneResponse(**result)

    return app
