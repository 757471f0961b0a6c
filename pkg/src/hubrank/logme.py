"""Per-task evidence scoring: one SVD, one evidence run per label dimension.

Classification labels are cast to {0,1} one-hot regression targets, one
column per class; multivariate regression targets are used column by
column.  The score of a feature matrix for a task is the mean of the
per-dimension normalized maximum log evidences.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import evidence
from .errors import DegenerateLabelsError, InputError
from .evidence import (
    BACKENDS,
    EvidenceSolution,
    FeatureMatrix,
    LabelVector,
    SvdFactors,
)

THREADS_ENV_VAR = "HUBRANK_THREADS"


def thread_cap() -> int:
    """Worker-thread budget, capped by the HUBRANK_THREADS environment variable."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is not None:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise InputError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise InputError(f"{THREADS_ENV_VAR} must be >= 1, got {cap}")
        return cap
    return os.cpu_count() or 1


@dataclass(frozen=True, eq=False)
class TaskLabels:
    """Labels of a downstream task: class indices or an n x C target matrix."""

    kind: str
    class_indices: np.ndarray | None = None
    targets: np.ndarray | None = None
    num_dimensions: int = 0

    @classmethod
    def classification(cls, indices, num_classes: int | None = None) -> "TaskLabels":
        idx = np.asarray(indices)
        if idx.ndim != 1:
            raise InputError("class indices must be 1-D")
        if idx.size == 0:
            raise InputError("class indices must be non-empty")
        if not np.issubdtype(idx.dtype, np.integer):
            as_int = idx.astype(np.int64)
            if not np.array_equal(as_int, idx):
                raise InputError("class indices must be integers")
            idx = as_int
        idx = idx.astype(np.int64)
        if idx.min() < 0:
            raise InputError("class indices must be non-negative")
        c = int(num_classes) if num_classes is not None else int(idx.max()) + 1
        if idx.max() >= c:
            raise InputError(f"class index {int(idx.max())} out of range for {c} classes")
        if np.unique(idx).size < 2:
            raise InputError("need at least 2 distinct classes")
        return cls(kind="classification", class_indices=idx, num_dimensions=c)

    @classmethod
    def regression(cls, targets) -> "TaskLabels":
        t = np.asarray(targets, dtype=np.float64)
        if t.ndim == 1:
            t = t[:, None]
        if t.ndim != 2 or t.shape[1] < 1:
            raise InputError(f"regression targets must be n x C, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise InputError("regression targets must be finite")
        return cls(kind="regression", targets=t, num_dimensions=t.shape[1])

    @property
    def n(self) -> int:
        if self.kind == "classification":
            return self.class_indices.shape[0]
        return self.targets.shape[0]

    def column(self, c: int) -> np.ndarray:
        if self.kind == "classification":
            return (self.class_indices == c).astype(np.float64)
        return self.targets[:, c]


@dataclass(frozen=True)
class SkippedDimension:
    index: int
    reason: str


@dataclass(frozen=True, eq=False)
class LogMeReport:
    """Per-dimension evidence solutions and their mean normalized evidence."""

    per_dimension: tuple[EvidenceSolution, ...]
    dimension_indices: tuple[int, ...]
    skipped: tuple[SkippedDimension, ...]
    logme: float
    backend: str


def _solve_column(
    features: FeatureMatrix,
    svd: SvdFactors,
    column: np.ndarray,
    backend: str,
) -> EvidenceSolution:
    y = LabelVector(column)
    if backend == "fixed_point":
        return evidence.maximize_evidence_fixed_point(svd, y)
    return evidence.maximize_evidence_mackay(features, y, variant=backend, svd=svd)


def compute_logme(
    features: FeatureMatrix,
    labels: TaskLabels,
    backend: str = "fixed_point",
    threads: int | None = None,
) -> LogMeReport:
    """Score a feature matrix against task labels.

    The SVD of the features is computed once and shared (read-only) by all
    per-dimension runs, which may execute in parallel.  Constant label
    columns, e.g. one-hot columns of classes absent from the sample, are
    skipped and recorded rather than raised.
    """
    if backend not in BACKENDS:
        raise InputError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if labels.n != features.n:
        raise InputError(f"labels have {labels.n} rows, features have {features.n}")

    svd = evidence.decompose(features)
    if svd.rank == 0:
        raise DegenerateLabelsError("features carry no signal (numerical rank zero)")

    columns: list[tuple[int, np.ndarray]] = []
    skipped: list[SkippedDimension] = []
    for c in range(labels.num_dimensions):
        col = labels.column(c)
        if np.all(col == col[0]):
            reason = (
                "class absent from sample"
                if labels.kind == "classification" and not np.any(col)
                else "constant target column"
            )
            skipped.append(SkippedDimension(index=c, reason=reason))
        else:
            columns.append((c, col))
    if not columns:
        raise DegenerateLabelsError("no usable label dimension: all columns skipped")

    workers = threads if threads is not None else thread_cap()
    workers = max(1, min(workers, len(columns)))
    if workers == 1:
        solutions = [_solve_column(features, svd, col, backend) for _, col in columns]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solutions = list(
                pool.map(lambda pair: _solve_column(features, svd, pair[1], backend), columns)
            )

    logme = float(np.mean([s.normalized_evidence for s in solutions]))
    return LogMeReport(
        per_dimension=tuple(solutions),
        dimension_indices=tuple(c for c, _ in columns),
        skipped=tuple(skipped),
        logme=logme,
        backend=backend,
    )


def compute_logme_regression_1d(
    features: FeatureMatrix, y: LabelVector, backend: str = "fixed_point"
) -> EvidenceSolution:
    """Single-target path: exactly the evidence-module result for one column."""
    report = compute_logme(features, TaskLabels.regression(y.values), backend=backend)
    return report.per_dimension[0]
