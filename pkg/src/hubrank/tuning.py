"""Desk-scale multi-teacher tuning: synthetic tasks, a linear student, and
full-batch gradient descent on task loss plus a teacher-alignment penalty.

Teachers are frozen feature matrices of varying quality extracted once for
the training set.  Their predictive heads and the per-sample ensemble
targets are computed before training and never change; the only trainable
parts are the student's feature map, its output head, and (for the
distillation penalty) the per-teacher feature transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import evidence, logme, predictive
from .errors import HubrankError, InputError
from .evidence import FeatureMatrix, LabelVector


class TrainingDiverged(HubrankError):
    """Training produced a non-finite loss."""


REGULARIZERS = ("bayesian", "kd", "none")

DEFAULT_CENTERS = ((-2.0, -1.0), (2.0, -1.0), (0.0, 2.0))


@dataclass(frozen=True)
class ToyTaskSpec:
    """Synthetic task description, fully determined by its seed.

    Classification draws three (by default) Gaussian clusters in the plane;
    regression draws x ~ U[0, 1] with y = slope * x + observation noise.
    Teachers observe the clean signal corrupted by their own noise level;
    the student's input embeds the signal corrupted by ``student_noise``
    into ``student_input_dim`` dimensions (extra dimensions are pure noise).
    """

    kind: str = "classification"
    n_train: int = 150
    n_test: int = 1000
    seed: int = 0
    teacher_noise: tuple[float, ...] = (0.0,)
    student_noise: float = 1.0
    student_input_dim: int = 2
    label_noise: float = 0.0
    n_pretrain: int = 0
    # classification only
    centers: tuple[tuple[float, float], ...] = DEFAULT_CENTERS
    cluster_std: float = 0.5
    # regression only
    slope: float = 2.0
    observation_noise: float = 0.1

    def __post_init__(self):
        if self.kind not in ("classification", "regression"):
            raise InputError(f"unknown task kind {self.kind!r}")
        if self.n_train < 2 or self.n_test < 1:
            raise InputError("need n_train >= 2 and n_test >= 1")
        if not self.teacher_noise:
            raise InputError("need at least one teacher noise level")
        if any(level < 0 for level in self.teacher_noise):
            raise InputError("teacher noise levels must be non-negative")
        if self.student_noise < 0:
            raise InputError("student noise must be non-negative")
        if not 0.0 <= self.label_noise < 1.0:
            raise InputError("label_noise must lie in [0, 1)")
        if self.label_noise > 0 and self.kind != "classification":
            raise InputError("label_noise applies to classification tasks only")
        if self.n_pretrain < 0:
            raise InputError("n_pretrain must be non-negative")
        if self.kind == "classification" and len(self.centers) < 2:
            raise InputError("need at least 2 cluster centers")
        signal_dim = 2 if self.kind == "classification" else 1
        if self.student_input_dim < signal_dim:
            raise InputError(f"student_input_dim must be >= {signal_dim}")


@dataclass(frozen=True, eq=False)
class FrozenTeacher:
    """A fixed feature matrix for the training set, plus its noise level."""

    teacher_id: str
    features: FeatureMatrix
    noise_level: float


@dataclass(frozen=True, eq=False)
class ToyTask:
    kind: str
    student_train: np.ndarray
    student_test: np.ndarray
    train_labels: np.ndarray  # class indices, or targets of shape (n, 1)
    test_labels: np.ndarray
    teachers: tuple[FrozenTeacher, ...]
    num_classes: int  # label dimensionality; 1 for regression
    pretrain_inputs: np.ndarray | None = None
    pretrain_labels: np.ndarray | None = None

    def task_labels(self) -> logme.TaskLabels:
        if self.kind == "classification":
            return logme.TaskLabels.classification(self.train_labels, num_classes=self.num_classes)
        return logme.TaskLabels.regression(self.train_labels)


def _embed_signal(signal: np.ndarray, noise: float, dim: int, rng) -> np.ndarray:
    n, s = signal.shape
    out = np.empty((n, dim))
    out[:, :s] = signal + noise * rng.normal(size=(n, s))
    if dim > s:
        out[:, s:] = noise * rng.normal(size=(n, dim - s)) if noise > 0 else 0.0
    return out


def generate_toy_task(spec: ToyTaskSpec) -> ToyTask:
    """Draw a reproducible task: same spec (and seed) means identical bits."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "classification":
        centers = np.asarray(spec.centers, dtype=np.float64)
        num_classes = centers.shape[0]
        train_cls = rng.integers(0, num_classes, size=spec.n_train)
        test_cls = rng.integers(0, num_classes, size=spec.n_test)
        # every class must appear in training data for one-hot evidence runs
        train_cls[:num_classes] = np.arange(num_classes)
        clean_train = centers[train_cls] + spec.cluster_std * rng.normal(size=(spec.n_train, 2))
        clean_test = centers[test_cls] + spec.cluster_std * rng.normal(size=(spec.n_test, 2))
        train_labels, test_labels = train_cls, test_cls
    else:
        num_classes = 1
        x_train = rng.uniform(0.0, 1.0, size=spec.n_train)
        x_test = rng.uniform(0.0, 1.0, size=spec.n_test)
        y_train = spec.slope * x_train + spec.observation_noise * rng.normal(size=spec.n_train)
        y_test = spec.slope * x_test + spec.observation_noise * rng.normal(size=spec.n_test)
        clean_train, clean_test = x_train[:, None], x_test[:, None]
        train_labels, test_labels = y_train[:, None], y_test[:, None]

    teachers = tuple(
        FrozenTeacher(
            teacher_id=f"teacher-{k}",
            features=FeatureMatrix(
                clean_train + level * rng.normal(size=clean_train.shape)
            ),
            noise_level=level,
        )
        for k, level in enumerate(spec.teacher_noise)
    )
    student_train = _embed_signal(clean_train, spec.student_noise, spec.student_input_dim, rng)
    student_test = _embed_signal(clean_test, spec.student_noise, spec.student_input_dim, rng)

    if spec.label_noise > 0:
        # corrupt a fixed fraction of training labels; teachers keep their
        # clean features but their heads will be fitted on these corrupted
        # labels, just like the student
        n_flip = int(round(spec.label_noise * spec.n_train))
        flip_at = rng.choice(spec.n_train, size=n_flip, replace=False)
        shifts = rng.integers(1, num_classes, size=n_flip)
        train_labels = train_labels.copy()
        train_labels[flip_at] = (train_labels[flip_at] + shifts) % num_classes

    pretrain_inputs = pretrain_labels = None
    if spec.n_pretrain > 0:
        if spec.kind == "classification":
            pre_cls = rng.integers(0, num_classes, size=spec.n_pretrain)
            pre_cls[:num_classes] = np.arange(num_classes)
            clean_pre = centers[pre_cls] + spec.cluster_std * rng.normal(size=(spec.n_pretrain, 2))
            pretrain_labels = pre_cls
        else:
            x_pre = rng.uniform(0.0, 1.0, size=spec.n_pretrain)
            clean_pre = x_pre[:, None]
            pretrain_labels = (
                spec.slope * x_pre + spec.observation_noise * rng.normal(size=spec.n_pretrain)
            )[:, None]
        pretrain_inputs = _embed_signal(clean_pre, spec.student_noise, spec.student_input_dim, rng)

    return ToyTask(
        kind=spec.kind,
        student_train=student_train,
        student_test=student_test,
        train_labels=train_labels,
        test_labels=test_labels,
        teachers=teachers,
        num_classes=num_classes,
        pretrain_inputs=pretrain_inputs,
        pretrain_labels=pretrain_labels,
    )


# ---------------------------------------------------------------------------
# student model and configuration
# ---------------------------------------------------------------------------


@dataclass
class ToyStudent:
    """Linear feature map plus linear output head, all float64."""

    feature_map: np.ndarray  # D_in x D_t
    head_weights: np.ndarray  # D_t x C
    head_bias: np.ndarray  # C,

    @classmethod
    def initialize(cls, input_dim: int, feature_dim: int, out_dim: int, seed: int) -> "ToyStudent":
        rng = np.random.default_rng(seed)
        return cls(
            feature_map=rng.normal(scale=1.0 / math.sqrt(input_dim), size=(input_dim, feature_dim)),
            head_weights=rng.normal(scale=1.0 / math.sqrt(feature_dim), size=(feature_dim, out_dim)),
            head_bias=np.zeros(out_dim),
        )

    def features(self, inputs: np.ndarray) -> np.ndarray:
        return inputs @ self.feature_map

    def logits(self, inputs: np.ndarray) -> np.ndarray:
        return self.features(inputs) @ self.head_weights + self.head_bias


TASK_LOSSES = ("auto", "cross_entropy", "squared_error")


@dataclass(frozen=True)
class TuneConfig:
    lam: float = 1.0
    learning_rate: float = 0.1
    steps: int = 500
    seed: int = 0
    regularizer: str = "bayesian"
    num_teachers: int = 3
    student_feature_dim: int = 8
    task_loss: str = "auto"
    pretrain_steps: int = 300

    def __post_init__(self):
        if self.lam < 0:
            raise InputError("lambda must be non-negative")
        if self.learning_rate <= 0:
            raise InputError("learning rate must be positive")
        if self.steps < 1:
            raise InputError("need at least one step")
        if self.regularizer not in REGULARIZERS:
            raise InputError(f"regularizer must be one of {REGULARIZERS}")
        if self.num_teachers < 1:
            raise InputError("need at least one teacher")
        if self.task_loss not in TASK_LOSSES:
            raise InputError(f"task_loss must be one of {TASK_LOSSES}")
        if self.pretrain_steps < 1:
            raise InputError("pretrain_steps must be positive")

    def resolve_task_loss(self, kind: str) -> str:
        """Cross entropy for classification, squared error for regression,
        unless overridden.  Squared error on one-hot targets is the
        classification-as-regression reading that the evidence machinery
        itself is built on.
        """
        if self.task_loss != "auto":
            return self.task_loss
        return "cross_entropy" if kind == "classification" else "squared_error"


@dataclass(frozen=True, eq=False)
class TrainReport:
    config: TuneConfig
    loss_total: np.ndarray
    loss_task: np.ndarray
    loss_reg: np.ndarray
    final_train_metric: float
    final_test_metric: float
    metric_name: str
    teacher_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "config": {
                "lambda": self.config.lam,
                "learning_rate": self.config.learning_rate,
                "steps": self.config.steps,
                "seed": self.config.seed,
                "regularizer": self.config.regularizer,
                "num_teachers": self.config.num_teachers,
                "student_feature_dim": self.config.student_feature_dim,
                "task_loss": self.config.task_loss,
                "pretrain_steps": self.config.pretrain_steps,
            },
            "teacher_ids": list(self.teacher_ids),
            "loss_total": [float(v) for v in self.loss_total],
            "loss_task": [float(v) for v in self.loss_task],
            "loss_reg": [float(v) for v in self.loss_reg],
            "final_train_metric": self.final_train_metric,
            "final_test_metric": self.final_test_metric,
            "metric_name": self.metric_name,
        }


# ---------------------------------------------------------------------------
# losses and analytic gradients
# ---------------------------------------------------------------------------


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _one_hot(indices: np.ndarray, num_classes: int) -> np.ndarray:
    out = np.zeros((indices.shape[0], num_classes))
    out[np.arange(indices.shape[0]), indices] = 1.0
    return out


@dataclass(frozen=True, eq=False)
class _Objective:
    """Pure map from parameters to (losses, gradients) on fixed data.

    Holding the data, the frozen student head weights and the frozen
    ensemble targets here keeps the gradient step and the finite-difference
    checks working on exactly the same function.
    """

    inputs: np.ndarray
    task_loss: str
    class_indices: np.ndarray | None
    targets: np.ndarray | None
    lam: float
    regularizer: str
    bayes_targets: np.ndarray | None  # n x C_eval, fixed
    bayes_head: np.ndarray | None  # D_t x C_eval, fixed
    teacher_features: tuple[np.ndarray, ...] = ()
    num_classes: int = 0

    def __call__(self, params: dict[str, np.ndarray]) -> tuple[dict[str, float], dict[str, np.ndarray]]:
        with np.errstate(over="ignore", invalid="ignore"):
            return self._evaluate(params)

    def _evaluate(self, params: dict[str, np.ndarray]) -> tuple[dict[str, float], dict[str, np.ndarray]]:
        x = self.inputs
        n = x.shape[0]
        w_in, w_out, bias = params["feature_map"], params["head_weights"], params["head_bias"]
        h = x @ w_in
        z = h @ w_out + bias

        grads = {}
        if self.task_loss == "cross_entropy":
            p = _softmax(z)
            onehot = _one_hot(self.class_indices, self.num_classes)
            eps_free = np.clip(p[np.arange(n), self.class_indices], 1e-300, None)
            task = float(-np.mean(np.log(eps_free)))
            dz = (p - onehot) / n
        else:
            diff = z - self.targets
            task = float(np.mean(diff * diff))
            dz = 2.0 * diff / diff.size

        grads["head_weights"] = h.T @ dz
        grads["head_bias"] = dz.sum(axis=0)
        dh = dz @ w_out.T

        reg = 0.0
        if self.regularizer == "bayesian" and self.lam > 0:
            pred = h @ self.bayes_head
            gap = pred - self.bayes_targets
            reg = float(np.mean(gap * gap))
            dh = dh + self.lam * (2.0 * gap / gap.size) @ self.bayes_head.T
        elif self.regularizer == "kd" and self.lam > 0:
            k = len(self.teacher_features)
            for idx, phi in enumerate(self.teacher_features):
                w_k = params[f"transform_{idx}"]
                residual = phi - h @ w_k.T
                norms = np.linalg.norm(residual, axis=1)
                reg += float(np.mean(norms)) / k
                safe = np.where(norms > 0, norms, 1.0)
                unit = residual / safe[:, None]
                unit[norms == 0] = 0.0
                dh = dh - (self.lam / (n * k)) * (unit @ w_k)
                grads[f"transform_{idx}"] = -(self.lam / (n * k)) * (unit.T @ h)

        grads["feature_map"] = x.T @ dh
        losses = {"task": task, "reg": reg, "total": task + self.lam * reg}
        return losses, grads


def _fit_teacher_heads(task: ToyTask, teachers: tuple[FrozenTeacher, ...]):
    from .hubio import feature_content_hash

    labels = task.task_labels()
    heads = []
    for teacher in teachers:
        report = logme.compute_logme(teacher.features, labels)
        svd = evidence.decompose(teacher.features)
        heads.append(
            predictive.build_head(
                report,
                svd,
                teacher.teacher_id,
                feature_content_hash(teacher.features.data),
            )
        )
    return heads


def _student_reference_head(h0: np.ndarray, task: ToyTask) -> np.ndarray:
    """Student predictive weights from the initial (frozen) features, D_t x C."""
    report = logme.compute_logme(FeatureMatrix(h0), task.task_labels())
    return np.stack([s.m for s in report.per_dimension]).T


def _task_targets(task: ToyTask, labels: np.ndarray, task_loss: str) -> np.ndarray | None:
    if task_loss == "cross_entropy":
        return None
    if task.kind == "classification":
        return _one_hot(labels, task.num_classes)
    return labels


def train_student(
    task: ToyTask,
    config: TuneConfig,
    student: ToyStudent | None = None,
) -> TrainReport:
    """Full-batch gradient descent on task loss + lambda * alignment penalty.

    With ``regularizer="none"`` or lambda = 0 this is plain training; the
    trajectory is a deterministic function of the seed in both cases.
    Non-finite losses abort with a diagnostic.
    """
    teachers = task.teachers[: config.num_teachers]
    if config.regularizer != "none" and not teachers:
        raise InputError("task provides no teachers for the requested regularizer")
    task_loss = config.resolve_task_loss(task.kind)
    if task_loss == "cross_entropy" and task.kind != "classification":
        raise InputError("cross-entropy task loss needs class labels")

    if student is None:
        student = ToyStudent.initialize(
            task.student_train.shape[1],
            config.student_feature_dim,
            task.num_classes,
            config.seed,
        )
    params: dict[str, np.ndarray] = {
        "feature_map": student.feature_map.copy(),
        "head_weights": student.head_weights.copy(),
        "head_bias": student.head_bias.copy(),
    }

    bayes_targets = bayes_head = None
    teacher_mats: tuple[np.ndarray, ...] = ()
    use_reg = config.regularizer != "none" and config.lam > 0
    if use_reg:
        h0 = task.student_train @ params["feature_map"]
        if config.regularizer == "bayesian":
            heads = _fit_teacher_heads(task, teachers)
            ensemble = predictive.ensemble_target(
                heads, [t.features for t in teachers], check_hash=False
            )
            bayes_targets = ensemble.target
            bayes_head = _student_reference_head(h0, task)
        else:
            teacher_mats = tuple(t.features.data for t in teachers)
            for idx, phi in enumerate(teacher_mats):
                solution, *_ = np.linalg.lstsq(h0, phi, rcond=None)
                params[f"transform_{idx}"] = solution.T

    objective = _Objective(
        inputs=task.student_train,
        task_loss=task_loss,
        class_indices=task.train_labels if task_loss == "cross_entropy" else None,
        targets=_task_targets(task, task.train_labels, task_loss),
        lam=config.lam if use_reg else 0.0,
        regularizer=config.regularizer if use_reg else "none",
        bayes_targets=bayes_targets,
        bayes_head=bayes_head,
        teacher_features=teacher_mats,
        num_classes=task.num_classes,
    )

    total_curve, task_curve, reg_curve = [], [], []
    for step in range(config.steps):
        losses, grads = objective(params)
        if not math.isfinite(losses["total"]):
            raise TrainingDiverged(
                f"non-finite loss {losses['total']} at step {step}; "
                f"lower the learning rate (current {config.learning_rate})"
            )
        total_curve.append(losses["total"])
        task_curve.append(losses["task"])
        reg_curve.append(losses["reg"])
        for name, grad in grads.items():
            params[name] -= config.learning_rate * grad

    student.feature_map = params["feature_map"]
    student.head_weights = params["head_weights"]
    student.head_bias = params["head_bias"]

    if task.kind == "classification":
        metric = "accuracy"
        train_metric = _accuracy(student, task.student_train, task.train_labels)
        test_metric = _accuracy(student, task.student_test, task.test_labels)
    else:
        metric = "mse"
        train_metric = _mse(student, task.student_train, task.train_labels)
        test_metric = _mse(student, task.student_test, task.test_labels)

    return TrainReport(
        config=config,
        loss_total=np.array(total_curve),
        loss_task=np.array(task_curve),
        loss_reg=np.array(reg_curve),
        final_train_metric=train_metric,
        final_test_metric=test_metric,
        metric_name=metric,
        teacher_ids=tuple(t.teacher_id for t in teachers),
    )


def _accuracy(student: ToyStudent, inputs: np.ndarray, classes: np.ndarray) -> float:
    predicted = student.logits(inputs).argmax(axis=1)
    return float(np.mean(predicted == classes))


def _mse(student: ToyStudent, inputs: np.ndarray, targets: np.ndarray) -> float:
    diff = student.logits(inputs) - targets
    return float(np.mean(diff * diff))


def pretrain_student(task: ToyTask, config: TuneConfig) -> ToyStudent:
    """Plain-train a fresh student on the task's pretraining split.

    The result stands in for a pre-trained model about to be tuned: its
    initial features are meaningful, so the frozen reference head fitted on
    them is meaningful too.
    """
    if task.pretrain_inputs is None:
        raise InputError("task has no pretraining split (n_pretrain = 0)")
    student = ToyStudent.initialize(
        task.student_train.shape[1],
        config.student_feature_dim,
        task.num_classes,
        config.seed,
    )
    task_loss = config.resolve_task_loss(task.kind)
    pretrain = ToyTask(
        kind=task.kind,
        student_train=task.pretrain_inputs,
        student_test=task.student_test,
        train_labels=task.pretrain_labels,
        test_labels=task.test_labels,
        teachers=(),
        num_classes=task.num_classes,
    )
    plain = TuneConfig(
        lam=0.0,
        learning_rate=config.learning_rate,
        steps=config.pretrain_steps,
        seed=config.seed,
        regularizer="none",
        num_teachers=config.num_teachers,
        student_feature_dim=config.student_feature_dim,
        task_loss=task_loss,
    )
    train_student(pretrain, plain, student=student)
    return student


def benefit_demo_spec(seed: int) -> ToyTaskSpec:
    """The shipped noisy-student / clean-teacher comparison task.

    A pretrained two-dimensional student is tuned on a small, partly
    mislabeled sample; the single teacher sees the clean cluster signal.
    The teacher's ridge-like head averages the corrupted labels away, so
    its per-sample targets carry information plain tuning does not get.
    """
    return ToyTaskSpec(
        kind="classification",
        n_train=60,
        n_test=2000,
        seed=seed,
        teacher_noise=(0.0,),
        student_noise=0.8,
        student_input_dim=10,
        label_noise=0.25,
        n_pretrain=400,
        cluster_std=0.5,
    )


def benefit_demo_config(seed: int, lam: float) -> TuneConfig:
    return TuneConfig(
        lam=lam,
        learning_rate=0.1,
        steps=500,
        seed=seed,
        regularizer="bayesian" if lam > 0 else "none",
        num_teachers=1,
        student_feature_dim=2,
        task_loss="squared_error",
    )


def run_benefit_demo(seed: int, lam: float) -> TrainReport:
    """One arm of the tuning-benefit comparison at the given lambda."""
    task = generate_toy_task(benefit_demo_spec(seed))
    config = benefit_demo_config(seed, lam)
    student = pretrain_student(task, config)
    return train_student(task, config, student=student)


def select_top_k(report, k: int = 3) -> list[str]:
    """Ids of the k best-scored models from a ranking report."""
    return report.top_k(k)
