"""Posterior predictive heads, teacher ensembling, and tuning losses.

A converged evidence run for one label dimension yields weights m and
precisions (alpha*, beta*).  For a query feature f the predictive label is
Gaussian with mean f^T m and variance f^T A^{-1} f + 1/beta*, where
A = alpha* I + beta* F^T F.  The inverse is never materialized: with the
thin SVD factors V, sigma of the training features,

    A^{-1} = V diag(1/(alpha + beta sigma^2)) V^T + (I - V V^T) / alpha,

so applying it is two skinny matrix products.  Heads carry a content hash
of the training feature matrix so they cannot silently be paired with a
different feature space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .evidence import FeatureMatrix, SvdFactors

# imported late by hubio to avoid a cycle; kept import-free of hubio here


@dataclass(frozen=True, eq=False)
class PredictiveHead:
    """Per-dimension predictive weights and covariance factors for one model."""

    model_id: str
    feature_dim: int
    dimension_indices: tuple[int, ...]
    weights: np.ndarray          # C x D, row c is the predictive weight vector
    alpha_star: np.ndarray       # C,
    beta_star: np.ndarray        # C,
    right_vectors: np.ndarray    # D x r
    singular_values: np.ndarray  # r,
    feature_hash: str

    def __post_init__(self):
        c = len(self.dimension_indices)
        if self.weights.shape != (c, self.feature_dim):
            raise InputError(
                f"weights shape {self.weights.shape} != ({c}, {self.feature_dim})"
            )
        if self.alpha_star.shape != (c,) or self.beta_star.shape != (c,):
            raise InputError("alpha/beta must hold one value per dimension")
        if np.any(self.alpha_star <= 0) or np.any(self.beta_star <= 0):
            raise InputError("alpha and beta must be positive")
        if self.right_vectors.shape[0] != self.feature_dim:
            raise InputError("right_vectors must have feature_dim rows")
        if self.right_vectors.shape[1] != self.singular_values.shape[0]:
            raise InputError("right_vectors/singular_values rank mismatch")

    @property
    def num_dimensions(self) -> int:
        return len(self.dimension_indices)

    def _dim_slot(self, class_c: int) -> int:
        try:
            return self.dimension_indices.index(class_c)
        except ValueError:
            raise InputError(
                f"head for {self.model_id!r} has no dimension {class_c}"
            ) from None

    def apply_information(self, class_c: int, v: np.ndarray) -> np.ndarray:
        """A v with A = alpha I + beta F^T F, through the factors."""
        slot = self._dim_slot(class_c)
        alpha = float(self.alpha_star[slot])
        beta = float(self.beta_star[slot])
        p = self.right_vectors.T @ v
        return alpha * v + beta * (self.right_vectors @ (self.singular_values**2 * p))

    def apply_inverse_information(self, class_c: int, v: np.ndarray) -> np.ndarray:
        """A^{-1} v without forming the D x D inverse."""
        slot = self._dim_slot(class_c)
        alpha = float(self.alpha_star[slot])
        beta = float(self.beta_star[slot])
        p = self.right_vectors.T @ v
        scale = 1.0 / (alpha + beta * self.singular_values**2) - 1.0 / alpha
        return self.right_vectors @ (scale * p) + v / alpha

    def predictive_means(self, features: np.ndarray) -> np.ndarray:
        """n x C matrix of predictive means for a stack of query features."""
        f = np.asarray(features, dtype=np.float64)
        if f.ndim != 2 or f.shape[1] != self.feature_dim:
            raise InputError(
                f"features must be n x {self.feature_dim}, got shape {f.shape}"
            )
        return f @ self.weights.T


def predictive_matrix(head: PredictiveHead, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means and variances for a stack of query features.

    Returns two n x C arrays; column order follows the head's dimension
    indices.
    """
    f = np.asarray(features, dtype=np.float64)
    means = head.predictive_means(f)
    projected = f @ head.right_vectors  # n x r
    row_sq = np.sum(f * f, axis=1)
    variances = np.empty_like(means)
    for slot in range(head.num_dimensions):
        alpha = float(head.alpha_star[slot])
        beta = float(head.beta_star[slot])
        scale = 1.0 / (alpha + beta * head.singular_values**2) - 1.0 / alpha
        quad = (projected * projected) @ scale + row_sq / alpha
        variances[:, slot] = quad + 1.0 / beta
    return means, variances


def predictive_distribution(
    head: PredictiveHead, class_c: int, f: np.ndarray
) -> tuple[float, float]:
    """Predictive mean and variance of the label for one query feature."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (head.feature_dim,):
        raise InputError(f"query feature must have length {head.feature_dim}, got {f.shape}")
    slot = head._dim_slot(class_c)
    mean = float(f @ head.weights[slot])
    variance = float(f @ head.apply_inverse_information(class_c, f)) + 1.0 / float(
        head.beta_star[slot]
    )
    return mean, variance


def build_head(
    report,
    svd: SvdFactors,
    model_id: str,
    feature_hash: str,
) -> PredictiveHead:
    """Assemble a predictive head from a per-task evidence report."""
    weights = np.stack([solution.m for solution in report.per_dimension])
    return PredictiveHead(
        model_id=model_id,
        feature_dim=svd.dim,
        dimension_indices=tuple(report.dimension_indices),
        weights=weights,
        alpha_star=np.array([s.alpha for s in report.per_dimension]),
        beta_star=np.array([s.beta for s in report.per_dimension]),
        right_vectors=svd.right_vectors,
        singular_values=svd.singular_values,
        feature_hash=feature_hash,
    )


# ---------------------------------------------------------------------------
# teacher ensembling and tuning losses
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EnsembleTarget:
    """Fixed per-sample regression targets averaged over teacher heads."""

    target: np.ndarray  # n x C
    teacher_ids: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.target.shape[0]

    @property
    def num_dimensions(self) -> int:
        return self.target.shape[1]


def ensemble_target(
    heads: list[PredictiveHead],
    teacher_features: list[FeatureMatrix],
    check_hash: bool = True,
) -> EnsembleTarget:
    """Average the teachers' predictive means sample by sample.

    The features handed in must be the exact matrices the heads were fitted
    on; with ``check_hash`` the pairing is verified through the embedded
    content hash.  The result is a constant: it is computed once before
    tuning and never updated.
    """
    from .hubio import feature_content_hash  # local import, hubio imports us

    if not heads:
        raise InputError("need at least one teacher head")
    if len(heads) != len(teacher_features):
        raise InputError("one feature matrix per head required")
    n = teacher_features[0].n
    dims = heads[0].dimension_indices
    total = np.zeros((n, len(dims)))
    for head, features in zip(heads, teacher_features):
        if features.n != n:
            raise InputError(
                f"teacher {head.model_id!r} has {features.n} samples, expected {n}"
            )
        if features.dim != head.feature_dim:
            raise InputError(
                f"teacher {head.model_id!r} features are {features.dim}-dimensional, "
                f"head expects {head.feature_dim}"
            )
        if head.dimension_indices != dims:
            raise InputError("teacher heads cover different label dimensions")
        if check_hash and feature_content_hash(features.data) != head.feature_hash:
            raise InputError(
                f"feature hash mismatch for teacher {head.model_id!r}: "
                "head was fitted on a different feature matrix"
            )
        total += head.predictive_means(features.data)
    total /= len(heads)
    return EnsembleTarget(target=total, teacher_ids=tuple(h.model_id for h in heads))


def b_tuning_loss(
    target: EnsembleTarget,
    student_features: np.ndarray,
    student_head: PredictiveHead,
) -> float:
    """Mean squared gap between ensemble targets and student predictive means.

    Zero exactly when the student's predictive means equal the ensemble
    targets on every sample and dimension; the student head stays fixed,
    only the features vary during tuning.
    """
    f = np.asarray(student_features, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] != target.n:
        raise InputError(
            f"student features must be {target.n} x D_t, got shape {f.shape}"
        )
    means = student_head.predictive_means(f)
    if means.shape[1] != target.num_dimensions:
        raise InputError("student head and ensemble target cover different dimensions")
    gap = target.target - means
    return float(np.mean(gap * gap))


def kd_loss(
    teacher_features: list[np.ndarray],
    student_features: np.ndarray,
    transforms: list[np.ndarray],
) -> float:
    """Feature-space distillation baseline with per-teacher linear transforms.

    Per sample and teacher the penalty is the plain (unsquared) Euclidean
    norm of phi_k(x_i) - W_k phi_t(x_i), averaged over teachers then samples.
    """
    f_t = np.asarray(student_features, dtype=np.float64)
    if f_t.ndim != 2:
        raise InputError("student features must be 2-D")
    if len(teacher_features) != len(transforms):
        raise InputError("one transform per teacher required")
    if not teacher_features:
        raise InputError("need at least one teacher")
    n = f_t.shape[0]
    total = 0.0
    for k, (phi_k, w_k) in enumerate(zip(teacher_features, transforms)):
        phi_k = np.asarray(phi_k, dtype=np.float64)
        w_k = np.asarray(w_k, dtype=np.float64)
        if phi_k.shape[0] != n:
            raise InputError(f"teacher {k} has {phi_k.shape[0]} samples, expected {n}")
        if w_k.shape != (phi_k.shape[1], f_t.shape[1]):
            raise InputError(
                f"transform {k} must be {phi_k.shape[1]} x {f_t.shape[1]}, got {w_k.shape}"
            )
        residual = phi_k - f_t @ w_k.T
        total += float(np.mean(np.linalg.norm(residual, axis=1)))
    return total / len(teacher_features)
