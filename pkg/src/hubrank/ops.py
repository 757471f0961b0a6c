"""High-level operations behind the service endpoints and CLI commands.

Everything here speaks paths and plain dicts so the HTTP layer stays a
serialization shim.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bench, evidence, hubio, logme, predictive, ranking, tuning
from .errors import DegenerateLabelsError, InputError
from .evidence import GridSpec, LabelVector


def _solution_dict(index: int, solution) -> dict:
    return {
        "dimension": index,
        "normalized_evidence": solution.normalized_evidence,
        "log_evidence": solution.log_evidence,
        "alpha": solution.alpha,
        "beta": solution.beta,
        "t": solution.t,
        "gamma": solution.gamma,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "guaranteed": solution.guaranteed,
    }


def score_features(
    features_path: str,
    labels_path: str,
    task_kind: str,
    num_classes: int | None = None,
    backend: str = "fixed_point",
    dump_head_path: str | None = None,
    threads: int | None = None,
) -> dict:
    """Score one feature file against one label file; optionally dump the head."""
    features = hubio.read_feature_file(features_path)
    labels = hubio.read_labels(labels_path, task_kind, num_classes=num_classes)
    report = logme.compute_logme(features, labels, backend=backend, threads=threads)
    result = {
        "logme": report.logme,
        "backend": report.backend,
        "per_dimension": [
            _solution_dict(index, sol)
            for index, sol in zip(report.dimension_indices, report.per_dimension)
        ],
        "skipped": [{"dimension": s.index, "reason": s.reason} for s in report.skipped],
    }
    if dump_head_path:
        svd = evidence.decompose(features)
        head = predictive.build_head(
            report,
            svd,
            model_id=os.path.basename(features_path),
            feature_hash=hubio.feature_content_hash(features.data),
        )
        hubio.write_head(dump_head_path, head)
        result["head_path"] = str(dump_head_path)
    return result


def rank_manifest(
    manifest_path: str,
    top_k: int = 3,
    backend: str = "fixed_point",
    threads: int | None = None,
) -> dict:
    """Score every model in a hub manifest and rank them.

    Models are evaluated in parallel over a shared thread budget; the
    output ordering is deterministic regardless of scheduling.
    """
    manifest = hubio.read_manifest(manifest_path)
    labels = manifest.labels()

    budget = threads if threads is not None else logme.thread_cap()
    outer = max(1, min(budget, len(manifest.models)))
    inner = max(1, budget // outer)

    def score_one(model) -> float:
        features = hubio.read_feature_file(model.feature_file)
        return logme.compute_logme(features, labels, backend=backend, threads=inner).logme

    if outer == 1:
        scores = [score_one(m) for m in manifest.models]
    else:
        with ThreadPoolExecutor(max_workers=outer) as pool:
            scores = list(pool.map(score_one, manifest.models))

    scored = [(m.model_id, s) for m, s in zip(manifest.models, scores)]
    truths = [m.truth for m in manifest.models] if manifest.has_truths else None
    report = ranking.rank_hub(scored, truths=truths, truth_direction=manifest.truth_direction)
    result = report.to_dict()
    result["dataset"] = manifest.dataset
    result["backend"] = backend
    result["top_k"] = report.top_k(top_k)
    return result


def _dimension_column(labels: logme.TaskLabels, class_index: int) -> np.ndarray:
    if not 0 <= class_index < labels.num_dimensions:
        raise InputError(
            f"label dimension {class_index} out of range (0..{labels.num_dimensions - 1})"
        )
    return labels.column(class_index)


def fixed_point_curve(
    features_path: str,
    labels_path: str,
    task_kind: str,
    class_index: int = 0,
    num_classes: int | None = None,
    t_min: float = 1e-3,
    t_max: float = 1e3,
    points: int = 200,
) -> dict:
    """Sample the scalar update map on a logarithmic grid of t values."""
    if points < 2:
        raise InputError("need at least 2 curve points")
    if not (t_min > 0 and t_max > t_min):
        raise InputError("need 0 < t_min < t_max")
    features = hubio.read_feature_file(features_path)
    labels = hubio.read_labels(labels_path, task_kind, num_classes=num_classes)
    column = _dimension_column(labels, class_index)
    svd = evidence.decompose(features)
    projected = evidence.project_labels(svd, LabelVector(column))
    grid = np.geomspace(t_min, t_max, points)
    rows = [[float(t), evidence.fixed_point_map(svd, projected, svd.n, float(t))] for t in grid]
    # the converged ratio is a best-effort annotation; the curve itself is
    # well-defined even where the maximizer is not (e.g. constant labels)
    converged_t = None
    converged = False
    try:
        solution = evidence.maximize_evidence_fixed_point(
            svd, LabelVector(column), projected=projected
        )
        converged_t, converged = solution.t, solution.converged
    except DegenerateLabelsError:
        pass
    return {
        "dimension": class_index,
        "rows": rows,
        "converged_t": converged_t,
        "converged": converged,
    }


def verify_convergence(
    features_path: str,
    labels_path: str,
    task_kind: str,
    num_classes: int | None = None,
    oracle: bool = False,
    class_index: int = 0,
) -> dict:
    """Convergence-condition report for every usable label dimension."""
    features = hubio.read_feature_file(features_path)
    labels = hubio.read_labels(labels_path, task_kind, num_classes=num_classes)
    svd = evidence.decompose(features)
    out = []
    for c in range(labels.num_dimensions):
        column = labels.column(c)
        if np.all(column == column[0]):
            out.append({"dimension": c, "skipped": "constant column"})
            continue
        projected = evidence.project_labels(svd, LabelVector(column))
        report = evidence.check_convergence(svd, projected, svd.n)
        out.append(
            {
                "dimension": c,
                "rank_condition": report.rank_condition,
                "ordering_statistic": report.ordering_statistic,
                "slope_at_infinity": report.slope_at_infinity,
                "limit_at_zero": report.limit_at_zero,
                "guaranteed": report.guaranteed,
            }
        )
    result = {"rank": svd.rank, "n": svd.n, "dimensions": out, "oracle_check": None}
    if oracle:
        column = _dimension_column(labels, class_index)
        y = LabelVector(column)
        solution = evidence.maximize_evidence_fixed_point(svd, y)
        grid_best = evidence.oracle_maximize(svd, y)
        result["oracle_check"] = {
            "dimension": class_index,
            "iterative": _solution_dict(class_index, solution),
            "oracle_alpha": grid_best.alpha,
            "oracle_beta": grid_best.beta,
            "oracle_normalized_evidence": grid_best.log_evidence / svd.n,
            "iterative_minus_oracle": solution.normalized_evidence
            - grid_best.log_evidence / svd.n,
        }
    return result


def predict_from_head(head_path: str, features_path: str) -> dict:
    """Predictive means and variances of a stored head on query features."""
    head = hubio.read_head(head_path)
    queries = hubio.read_matrix(features_path)
    if queries.shape[1] != head.feature_dim:
        raise InputError(
            f"query features are {queries.shape[1]}-dimensional, "
            f"head expects {head.feature_dim}"
        )
    means, variances = predictive.predictive_matrix(head, queries)
    return {
        "model_id": head.model_id,
        "dimensions": list(head.dimension_indices),
        "means": means.tolist(),
        "variances": variances.tolist(),
    }


def run_bench(
    n: int,
    dim: int,
    num_classes: int,
    backends: tuple[str, ...],
    repeats: int,
    seed: int,
    threads: int | None = None,
) -> dict:
    return bench.run_bench(
        n=n,
        dim=dim,
        num_classes=num_classes,
        backends=backends,
        repeats=repeats,
        seed=seed,
        threads=threads,
    ).to_dict()


def run_toy_tuning(config: dict) -> dict:
    """Run one toy tuning experiment described by a JSON-style config.

    The config holds a ``task`` section (toy-task fields) and a ``tune``
    section (optimizer fields).  Without a task section the shipped
    noisy-student / clean-teacher demo task is used.
    """
    tune_raw = dict(config.get("tune", {}))
    if "lambda" in tune_raw:
        tune_raw["lam"] = tune_raw.pop("lambda")
    seed = int(tune_raw.get("seed", 0))

    if "task" in config:
        task_raw = dict(config["task"])
        for key in ("teacher_noise", "centers"):
            if key in task_raw and isinstance(task_raw[key], list):
                task_raw[key] = tuple(
                    tuple(v) if isinstance(v, list) else v for v in task_raw[key]
                )
        task_raw.setdefault("seed", seed)
        spec = tuning.ToyTaskSpec(**task_raw)
    else:
        spec = tuning.benefit_demo_spec(seed)

    defaults = tuning.benefit_demo_config(seed, tune_raw.get("lam", 1.0))
    merged = {
        "lam": defaults.lam,
        "learning_rate": defaults.learning_rate,
        "steps": defaults.steps,
        "seed": seed,
        "regularizer": defaults.regularizer,
        "num_teachers": defaults.num_teachers,
        "student_feature_dim": defaults.student_feature_dim,
        "task_loss": defaults.task_loss,
        "pretrain_steps": defaults.pretrain_steps,
    }
    merged.update(tune_raw)
    config_obj = tuning.TuneConfig(**merged)

    task = tuning.generate_toy_task(spec)
    student = tuning.pretrain_student(task, config_obj) if spec.n_pretrain > 0 else None
    report = tuning.train_student(task, config_obj, student=student)
    return report.to_dict()
