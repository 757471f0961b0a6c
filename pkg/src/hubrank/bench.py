"""Wall-clock comparison of the evidence-maximization backends.

Synthetic classification data at a requested size is scored by each
backend; before any timing, all requested backends must agree on the score
to 1e-6.  Timings cover the full per-model pipeline a hub ranking pays
for: decomposition (where the backend needs it) plus every per-class
maximization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import logme
from .errors import InputError
from .evidence import BACKENDS, FeatureMatrix

AGREEMENT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class BackendTiming:
    backend: str
    logme_value: float
    seconds_mean: float
    seconds_min: float
    seconds_max: float
    repeats: int


@dataclass(frozen=True)
class BenchReport:
    n: int
    dim: int
    num_classes: int
    seed: int
    timings: tuple[BackendTiming, ...]
    max_disagreement: float

    def speedup_over(self, slow: str, fast: str) -> float:
        by_name = {t.backend: t for t in self.timings}
        return by_name[slow].seconds_mean / by_name[fast].seconds_mean

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dim": self.dim,
            "num_classes": self.num_classes,
            "seed": self.seed,
            "max_disagreement": self.max_disagreement,
            "backends": [
                {
                    "backend": t.backend,
                    "logme": t.logme_value,
                    "seconds_mean": t.seconds_mean,
                    "seconds_min": t.seconds_min,
                    "seconds_max": t.seconds_max,
                    "repeats": t.repeats,
                }
                for t in self.timings
            ],
        }


def synthetic_classification(n: int, dim: int, num_classes: int, seed: int):
    """Gaussian class clusters in feature space, labels guaranteed complete."""
    rng = np.random.default_rng(seed)
    centers = 1.5 * rng.normal(size=(num_classes, dim))
    indices = rng.integers(0, num_classes, size=n)
    indices[:num_classes] = np.arange(num_classes)
    features = centers[indices] + rng.normal(size=(n, dim))
    return FeatureMatrix(features), logme.TaskLabels.classification(indices, num_classes)


def run_bench(
    n: int = 10000,
    dim: int = 1024,
    num_classes: int = 100,
    backends: tuple[str, ...] = BACKENDS,
    repeats: int = 1,
    seed: int = 0,
    threads: int | None = None,
) -> BenchReport:
    if repeats < 1:
        raise InputError("repeats must be >= 1")
    if n < 2 or dim < 1 or num_classes < 2:
        raise InputError("need n >= 2, dim >= 1, num_classes >= 2")
    unknown = [b for b in backends if b not in BACKENDS]
    if unknown:
        raise InputError(f"unknown backends: {unknown}")

    features, labels = synthetic_classification(n, dim, num_classes, seed)

    values: dict[str, float] = {}
    samples: dict[str, list[float]] = {b: [] for b in backends}
    for backend in backends:
        for _ in range(repeats):
            start = time.perf_counter()
            report = logme.compute_logme(features, labels, backend=backend, threads=threads)
            samples[backend].append(time.perf_counter() - start)
        values[backend] = report.logme

    # timings are only reported when all backends computed the same score
    spread = max(values.values()) - min(values.values())
    if spread > AGREEMENT_TOLERANCE:
        raise InputError(
            f"backends disagree by {spread:.3e} (> {AGREEMENT_TOLERANCE}); discarding timings"
        )

    timings = tuple(
        BackendTiming(
            backend=backend,
            logme_value=values[backend],
            seconds_mean=float(np.mean(samples[backend])),
            seconds_min=float(np.min(samples[backend])),
            seconds_max=float(np.max(samples[backend])),
            repeats=repeats,
        )
        for backend in backends
    )
    return BenchReport(
        n=n,
        dim=dim,
        num_classes=num_classes,
        seed=seed,
        timings=timings,
        max_disagreement=spread,
    )
