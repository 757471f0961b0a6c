"""Bayesian linear-model evidence: evaluation, maximization, convergence.

The model is y_i ~ N(w^T f_i, 1/beta) with an isotropic Gaussian prior
w ~ N(0, I/alpha).  The log evidence

    L(alpha, beta) = n/2 log beta + D/2 log alpha - n/2 log 2pi
                     - beta/2 ||F m - y||^2 - alpha/2 m^T m - 1/2 log|A|

with A = alpha I + beta F^T F and m = beta A^{-1} F^T y, is maximized over
(alpha, beta) by an alternating update (``naive`` and ``svd_optimized``
backends) or by a scalar fixed-point iteration on t = alpha/beta
(``fixed_point`` backend).  All three backends agree on the maximum; they
differ only in cost.

Everything below a thin SVD of F is expressed through the singular values
``sigma``, the projected labels ``z = U_r^T y`` and the out-of-range label
energy ``delta``, which makes the fixed-point loop O(r) per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabelsError, DomainError, InputError

LOG_2PI = math.log(2.0 * math.pi)

#: Relative cutoff for the numerical rank: keep sigma_i > sigma_1 * max(n, D) * RANK_RTOL.
RANK_RTOL = 1e-12

#: Stop the solvers once |f(t) - t| <= CONVERGENCE_RTOL * t.  Chosen well below
#: the 1e-5 documented contract so that converged t* values are reproducible
#: across backends and initializations to ~1e-7 relative.
CONVERGENCE_RTOL = 1e-8

MAX_ITERATIONS = 200

BACKENDS = ("naive", "svd_optimized", "fixed_point")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


def _as_float_matrix(data, what: str) -> np.ndarray:
    a = np.asarray(data, dtype=np.float64)
    if a.ndim != 2:
        raise InputError(f"{what} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{what} contains non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """n x D matrix of extracted features, one row per sample (float64)."""

    data: np.ndarray

    def __post_init__(self):
        a = _as_float_matrix(self.data, "feature matrix")
        if a.shape[0] < 2:
            raise InputError(f"feature matrix needs at least 2 rows, got {a.shape[0]}")
        if a.shape[1] < 1:
            raise InputError("feature matrix needs at least 1 column")
        object.__setattr__(self, "data", a)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Length-n vector of scalar regression targets (float64)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise InputError(f"label vector must be 1-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InputError("label vector contains non-finite entries")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.values == self.values[0])) if len(self) else True


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD of a feature matrix, truncated to its numerical rank.

    ``left_vectors`` is n x r, ``right_vectors`` is D x r and
    ``singular_values`` is a strictly positive non-increasing length-r
    vector.  The same factors are shared, read-only, by every per-class
    evidence run on the same feature matrix.
    """

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def rank(self) -> int:
        return self.singular_values.shape[0]

    @property
    def n(self) -> int:
        return self.left_vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.right_vectors.shape[0]


@dataclass(frozen=True, eq=False)
class ProjectedLabels:
    """Labels expressed in the left singular basis.

    ``z_head`` holds the first r coordinates U_r^T y; ``residual_energy``
    is the label energy outside the feature column space,
    sum(y^2) - sum(z_head^2), clamped at zero.
    """

    z_head: np.ndarray
    residual_energy: float

    @property
    def total_energy(self) -> float:
        return float(self.z_head @ self.z_head) + self.residual_energy


@dataclass(frozen=True, eq=False)
class EvidenceSolution:
    """Converged state of one evidence maximization run."""

    alpha: float
    beta: float
    t: float
    m: np.ndarray
    gamma: float
    log_evidence: float
    normalized_evidence: float
    iterations: int
    converged: bool
    guaranteed: bool | None = None


@dataclass(frozen=True)
class ConvergenceReport:
    """Diagnosis of whether the alternating maximization is guaranteed to converge.

    ``ordering_statistic`` is sum_{i,j} (z_i^2 - z_j^2)(sigma_i^2 - sigma_j^2)
    over all n indices (sigma_i = 0 past the rank).  A positive value means
    the label energy is concentrated on the leading singular directions; it
    is equivalent to the asymptotic slope of the fixed-point map being below
    one, and together with r < n it guarantees a fixed point exists.
    """

    rank_condition: bool
    ordering_statistic: float
    slope_at_infinity: float
    limit_at_zero: float | None
    guaranteed: bool


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced (alpha, beta) search grid for the brute-force oracle."""

    alpha_min: float = 1e-6
    alpha_max: float = 1e6
    beta_min: float = 1e-6
    beta_max: float = 1e6
    num_alpha: int = 200
    num_beta: int = 200

    def __post_init__(self):
        if self.alpha_min <= 0 or self.beta_min <= 0:
            raise InputError("grid bounds must be positive")
        if self.alpha_max <= self.alpha_min or self.beta_max <= self.beta_min:
            raise InputError("grid upper bounds must exceed lower bounds")
        if self.num_alpha < 50 or self.num_beta < 50:
            raise InputError("grid needs at least 50 points per axis")

    def alphas(self) -> np.ndarray:
        return np.geomspace(self.alpha_min, self.alpha_max, self.num_alpha)

    def betas(self) -> np.ndarray:
        return np.geomspace(self.beta_min, self.beta_max, self.num_beta)


@dataclass(frozen=True)
class OracleResult:
    alpha: float
    beta: float
    log_evidence: float
    alpha_index: int
    beta_index: int
    grid: GridSpec = field(repr=False, default=GridSpec())


# ---------------------------------------------------------------------------
# decomposition and projection
# ---------------------------------------------------------------------------


def decompose(features: FeatureMatrix) -> SvdFactors:
    """Thin SVD of the feature matrix, truncated at the numerical rank.

    The rank cutoff is sigma_1 * max(n, D) * 1e-12.  LAPACK's divide and
    conquer routine already factors the short side first, so the cost is
    bounded by min(n, D)^2 * max(n, D) for both tall and wide inputs.
    """
    f = features.data
    u, s, vt = np.linalg.svd(f, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return _empty_factors(features.n, features.dim)
    cutoff = s[0] * max(f.shape) * RANK_RTOL
    r = int(np.count_nonzero(s > cutoff))
    if r == 0:
        return _empty_factors(features.n, features.dim)
    return SvdFactors(
        left_vectors=np.ascontiguousarray(u[:, :r]),
        singular_values=np.ascontiguousarray(s[:r]),
        right_vectors=np.ascontiguousarray(vt[:r].T),
    )


def _empty_factors(n: int, dim: int) -> SvdFactors:
    return SvdFactors(
        left_vectors=np.zeros((n, 0)),
        singular_values=np.zeros(0),
        right_vectors=np.zeros((dim, 0)),
    )


def project_labels(svd: SvdFactors, y: LabelVector) -> ProjectedLabels:
    """Project labels onto the left singular basis and split their energy."""
    if len(y) != svd.n:
        raise InputError(f"label length {len(y)} != sample count {svd.n}")
    z = svd.left_vectors.T @ y.values
    total = float(y.values @ y.values)
    residual = total - float(z @ z)
    if residual < -1e-9 * total:
        raise InputError("projected label energy exceeds total energy; factors are inconsistent")
    return ProjectedLabels(z_head=z, residual_energy=max(residual, 0.0))


# ---------------------------------------------------------------------------
# evidence evaluation (shared O(r) kernels)
# ---------------------------------------------------------------------------


def _check_positive(alpha: float, beta: float) -> None:
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must be positive and finite, got {alpha}")
    if not (beta > 0.0 and math.isfinite(beta)):
        raise DomainError(f"beta must be positive and finite, got {beta}")


def _log_evidence_from_spectrum(
    sigma2: np.ndarray,
    z2: np.ndarray,
    delta: float,
    n: int,
    dim: int,
    alpha: float,
    beta: float,
) -> float:
    """L(alpha, beta) through the singular spectrum.

    For directions beyond the rank, sigma_i = 0 turns the residual weight
    alpha^2/(alpha + beta sigma_i^2)^2 into 1, so that label energy enters
    the residual term unattenuated as ``delta``.
    """
    # bounded ratios (each factor <= 1) keep extreme alpha/beta pairs met
    # on degenerate problems from overflowing
    d = alpha + beta * sigma2
    prior_ratio = alpha / d
    fit_ratio = beta * sigma2 / d
    mtm = float(np.sum(fit_ratio * fit_ratio / sigma2 * z2)) if sigma2.size else 0.0
    residual = float(np.sum(prior_ratio * prior_ratio * z2)) + delta
    logdet = float(np.sum(np.logaddexp(math.log(alpha), math.log(beta) + np.log(sigma2)))) + (
        dim - sigma2.size
    ) * math.log(alpha)
    return (
        0.5 * n * math.log(beta)
        + 0.5 * dim * math.log(alpha)
        - 0.5 * n * LOG_2PI
        - 0.5 * beta * residual
        - 0.5 * alpha * mtm
        - 0.5 * logdet
    )


def _posterior_mean(svd: SvdFactors, z: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    scale = beta * svd.singular_values / (alpha + beta * svd.singular_values**2)
    return svd.right_vectors @ (scale * z)


def evaluate_evidence(
    svd: SvdFactors,
    y: LabelVector,
    alpha: float,
    beta: float,
    projected: ProjectedLabels | None = None,
) -> tuple[float, np.ndarray]:
    """Log evidence and posterior mean weights at fixed (alpha, beta)."""
    _check_positive(alpha, beta)
    proj = projected if projected is not None else project_labels(svd, y)
    sigma2 = svd.singular_values**2
    log_ev = _log_evidence_from_spectrum(
        sigma2, proj.z_head**2, proj.residual_energy, svd.n, svd.dim, alpha, beta
    )
    return log_ev, _posterior_mean(svd, proj.z_head, alpha, beta)


# ---------------------------------------------------------------------------
# the scalar fixed-point view
# ---------------------------------------------------------------------------


def _map_parts(sigma2, z2, delta, n, t):
    """(gamma, n - gamma, m^T m, ||Fm - y||^2) as functions of t alone.

    Written with bounded ratios (sigma^2/d <= 1, t/d <= 1) so that huge t
    values met while iterating on weak-signal labels cannot overflow, and
    with n - gamma accumulated directly as sum(t/d) + (n - r) so that it
    stays positive even where every sigma^2/d rounds to 1 (full-row-rank
    features near the interpolation boundary t -> 0).
    """
    d = t + sigma2
    ratio_s = sigma2 / d
    ratio_t = t / d
    gamma = float(np.sum(ratio_s))
    n_minus_gamma = float(np.sum(ratio_t)) + (n - sigma2.size)
    mtm = float(np.sum(ratio_s * z2 / d))
    residual = float(np.sum(ratio_t * ratio_t * z2)) + delta
    return gamma, n_minus_gamma, mtm, residual


def fixed_point_map(
    svd: SvdFactors, projected: ProjectedLabels, n: int, t: float
) -> float:
    """One application of the scalar update t' = f(t).

    Pure function of the spectrum and projected labels; the maximizer of
    the evidence in the ratio t = alpha/beta is a fixed point of this map.
    """
    if not (t > 0.0 and math.isfinite(t)):
        raise DomainError(f"t must be positive and finite, got {t}")
    sigma2 = svd.singular_values**2
    z2 = projected.z_head**2
    gamma, n_minus_gamma, mtm, residual = _map_parts(
        sigma2, z2, projected.residual_energy, n, t
    )
    if mtm <= 0.0:
        raise DegenerateLabelsError("labels are orthogonal to the feature column space")
    if n_minus_gamma <= 0.0:
        raise DegenerateLabelsError("no residual degrees of freedom (gamma >= n)")
    # gamma/(n - gamma) * residual/mtm, with residual already in t-units
    return gamma / n_minus_gamma * residual / mtm


def check_convergence(svd: SvdFactors, projected: ProjectedLabels, n: int) -> ConvergenceReport:
    """Diagnose the sufficient condition for the fixed point to exist.

    Degenerate inputs are reported (guaranteed=False, non-finite slopes),
    never raised.
    """
    sigma2 = svd.singular_values**2
    z2 = projected.z_head**2
    r = svd.rank
    sum_s2 = float(np.sum(sigma2))
    sum_z2 = float(np.sum(z2)) + projected.residual_energy
    sum_s2z2 = float(np.sum(sigma2 * z2))
    ordering = 2.0 * n * sum_s2z2 - 2.0 * sum_s2 * sum_z2
    slope = (sum_s2 / n) * (sum_z2 / sum_s2z2) if sum_s2z2 > 0.0 else math.inf
    head = float(np.sum(z2))
    limit = None
    if r < n:
        limit = (r / (n - r)) * (projected.residual_energy / head) if head > 0.0 else math.inf
    rank_condition = r < n
    return ConvergenceReport(
        rank_condition=rank_condition,
        ordering_statistic=ordering,
        slope_at_infinity=slope,
        limit_at_zero=limit,
        guaranteed=bool(rank_condition and ordering > 0.0),
    )


# ---------------------------------------------------------------------------
# maximization backends
# ---------------------------------------------------------------------------


def _require_usable(svd: SvdFactors, y: LabelVector) -> None:
    if svd.rank == 0:
        raise DegenerateLabelsError("features carry no signal (numerical rank zero)")
    if y.is_constant:
        raise DegenerateLabelsError("constant labels admit no evidence maximizer")


def _finish_from_t(
    svd: SvdFactors,
    proj: ProjectedLabels,
    t: float,
    iterations: int,
    converged: bool,
    guaranteed: bool | None,
) -> EvidenceSolution:
    """Apply the alternating update once at t and assemble the solution.

    The returned alpha, beta, m and gamma are mutually consistent:
    alpha = gamma/m^T m, beta = (n - gamma)/||Fm - y||^2 and t = alpha/beta
    exactly.
    """
    sigma2 = svd.singular_values**2
    z2 = proj.z_head**2
    n = svd.n
    # m^T m and ||Fm - y||^2 depend on (alpha, beta) only through t, so the
    # t-unit quantities from _map_parts are already the true values.
    gamma, n_minus_gamma, mtm, residual = _map_parts(sigma2, z2, proj.residual_energy, n, t)
    if mtm <= 0.0:
        raise DegenerateLabelsError("labels are orthogonal to the feature column space")
    if residual <= 0.0 or n_minus_gamma <= 0.0:
        raise DegenerateLabelsError("labels are fitted exactly; the noise precision is unbounded")
    alpha = gamma / mtm
    beta = n_minus_gamma / residual
    t_out = alpha / beta
    gamma_out = float(np.sum(sigma2 / (t_out + sigma2)))
    log_ev = _log_evidence_from_spectrum(
        sigma2, z2, proj.residual_energy, n, svd.dim, alpha, beta
    )
    m = _posterior_mean(svd, proj.z_head, alpha, beta)
    return EvidenceSolution(
        alpha=alpha,
        beta=beta,
        t=t_out,
        m=m,
        gamma=gamma_out,
        log_evidence=log_ev,
        normalized_evidence=log_ev / n,
        iterations=iterations,
        converged=converged,
        guaranteed=guaranteed,
    )


def maximize_evidence_fixed_point(
    svd: SvdFactors,
    y: LabelVector,
    projected: ProjectedLabels | None = None,
    rtol: float = CONVERGENCE_RTOL,
    max_iterations: int = MAX_ITERATIONS,
) -> EvidenceSolution:
    """Maximize the evidence by iterating the scalar map t' = f(t).

    Each step costs O(r); the heavy lifting happened once in the SVD.
    Non-convergence within the iteration budget returns the best iterate
    with ``converged=False`` instead of raising.
    """
    _require_usable(svd, y)
    proj = projected if projected is not None else project_labels(svd, y)
    sigma2 = svd.singular_values**2
    z2 = proj.z_head**2
    n = svd.n
    if not np.any(z2):
        raise DegenerateLabelsError("labels are orthogonal to the feature column space")
    report = check_convergence(svd, proj, n)

    # Exactly-fitted labels (residual -> 0) push t to 0 and noise-like labels
    # push it to infinity; both boundaries have no interior maximizer, so the
    # iterate is clamped where the arithmetic is still well-scaled.
    t_floor = 1e-120 * (1.0 + float(sigma2[0]))
    t_ceil = 1e120 * (1.0 + float(sigma2[0]))

    t = 1.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        gamma, n_minus_gamma, mtm, residual = _map_parts(sigma2, z2, proj.residual_energy, n, t)
        if mtm <= 0.0 or n_minus_gamma <= 0.0:
            break
        t_next = gamma / n_minus_gamma * residual / mtm
        if not math.isfinite(t_next) or not t_floor <= t_next <= t_ceil:
            break
        if abs(t_next - t) <= rtol * t:
            t = t_next
            converged = True
            break
        t = t_next
    return _finish_from_t(svd, proj, t, iterations, converged, report.guaranteed)


def maximize_evidence_mackay(
    features: FeatureMatrix,
    y: LabelVector,
    variant: str = "svd_optimized",
    svd: SvdFactors | None = None,
    rtol: float = CONVERGENCE_RTOL,
    max_iterations: int = MAX_ITERATIONS,
) -> EvidenceSolution:
    """Maximize the evidence by the alternating (alpha, beta) update.

    ``variant="naive"`` works with dense D x D linear algebra and never
    touches the SVD: gamma comes from the trace of A^{-1} and the log
    evidence from a dense determinant.  ``variant="svd_optimized"``
    computes the posterior mean through the factored product
    m = beta V diag(1/(alpha + beta sigma^2)) V^T F^T y.
    Both return the same solution as the fixed-point backend.
    """
    if variant not in ("naive", "svd_optimized"):
        raise InputError(f"unknown MacKay variant {variant!r}")
    f = features.data
    if len(y) != features.n:
        raise InputError(f"label length {len(y)} != sample count {features.n}")
    if y.is_constant:
        raise DegenerateLabelsError("constant labels admit no evidence maximizer")

    if variant == "naive":
        return _mackay_naive(f, y.values, rtol, max_iterations)

    if svd is None:
        svd = decompose(features)
    _require_usable(svd, y)
    return _mackay_svd(f, y, svd, rtol, max_iterations)


def _mackay_naive(f: np.ndarray, y: np.ndarray, rtol: float, max_iterations: int) -> EvidenceSolution:
    n, dim = f.shape
    gram = f.T @ f
    fty = f.T @ y
    if not np.any(gram):
        raise DegenerateLabelsError("features carry no signal (numerical rank zero)")
    if not np.any(fty):
        raise DegenerateLabelsError("labels are orthogonal to the feature column space")

    alpha, beta = 1.0, 1.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        a = alpha * np.eye(dim) + beta * gram
        a_inv = np.linalg.inv(a)
        m = beta * (a_inv @ fty)
        gamma = dim - alpha * float(np.trace(a_inv))
        mtm = float(m @ m)
        diff = f @ m - y
        residual = float(diff @ diff)
        if mtm <= 0.0 or residual <= 0.0 or gamma >= n:
            break
        alpha_next = gamma / mtm
        beta_next = (n - gamma) / residual
        if not (
            math.isfinite(alpha_next)
            and math.isfinite(beta_next)
            and alpha_next > 0.0
            and beta_next > 0.0
        ):
            break
        step = abs(alpha_next / beta_next - alpha / beta)
        alpha, beta = alpha_next, beta_next
        if step <= rtol * (alpha / beta):
            converged = True
            break

    a = alpha * np.eye(dim) + beta * gram
    a_inv = np.linalg.inv(a)
    m = beta * (a_inv @ fty)
    gamma = dim - alpha * float(np.trace(a_inv))
    diff = f @ m - y
    sign, logdet = np.linalg.slogdet(a)
    log_ev = (
        0.5 * n * math.log(beta)
        + 0.5 * dim * math.log(alpha)
        - 0.5 * n * LOG_2PI
        - 0.5 * beta * float(diff @ diff)
        - 0.5 * alpha * float(m @ m)
        - 0.5 * logdet
    )
    return EvidenceSolution(
        alpha=alpha,
        beta=beta,
        t=alpha / beta,
        m=m,
        gamma=gamma,
        log_evidence=log_ev,
        normalized_evidence=log_ev / n,
        iterations=iterations,
        converged=converged,
    )


def _mackay_svd(
    f: np.ndarray,
    y: LabelVector,
    svd: SvdFactors,
    rtol: float,
    max_iterations: int,
) -> EvidenceSolution:
    n = svd.n
    sigma2 = svd.singular_values**2
    fty = f.T @ y.values
    vt_fty = svd.right_vectors.T @ fty
    if not np.any(vt_fty):
        raise DegenerateLabelsError("labels are orthogonal to the feature column space")

    alpha, beta = 1.0, 1.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        lam = alpha + beta * sigma2
        m = beta * (svd.right_vectors @ (vt_fty / lam))
        gamma = float(np.sum(beta * sigma2 / lam))
        n_minus_gamma = float(np.sum(alpha / lam)) + (n - svd.rank)
        mtm = float(m @ m)
        diff = f @ m - y.values
        residual = float(diff @ diff)
        if mtm <= 0.0 or residual <= 0.0 or n_minus_gamma <= 0.0:
            break
        alpha_next = gamma / mtm
        beta_next = n_minus_gamma / residual
        if not (
            math.isfinite(alpha_next)
            and math.isfinite(beta_next)
            and alpha_next > 0.0
            and beta_next > 0.0
        ):
            break
        step = abs(alpha_next / beta_next - alpha / beta)
        alpha, beta = alpha_next, beta_next
        if step <= rtol * (alpha / beta):
            converged = True
            break

    scale = 1.0 + float(sigma2[0])
    t = min(max(alpha / beta, 1e-120 * scale), 1e120 * scale)
    proj = project_labels(svd, y)
    return _finish_from_t(svd, proj, t, iterations, converged, None)


def maximize_evidence(
    features: FeatureMatrix,
    y: LabelVector,
    backend: str = "fixed_point",
    svd: SvdFactors | None = None,
) -> EvidenceSolution:
    """Dispatch to one of the three maximization backends."""
    if backend == "fixed_point":
        if svd is None:
            svd = decompose(features)
        return maximize_evidence_fixed_point(svd, y)
    if backend in ("naive", "svd_optimized"):
        return maximize_evidence_mackay(features, y, variant=backend, svd=svd)
    raise InputError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def oracle_maximize(
    svd: SvdFactors, y: LabelVector, grid: GridSpec | None = None
) -> OracleResult:
    """Exhaustive log-evidence search over a log-spaced (alpha, beta) grid.

    Deliberately simple: it is the independent check against which the
    iterative solvers are verified, both in the tests and in the ``verify``
    command path.
    """
    grid = grid if grid is not None else GridSpec()
    proj = project_labels(svd, y)
    sigma2 = svd.singular_values**2
    z2 = proj.z_head**2
    delta = proj.residual_energy
    n, dim, r = svd.n, svd.dim, svd.rank

    betas = grid.betas()
    log_betas = np.log(betas)
    best = (-math.inf, 0, 0)
    alphas = grid.alphas()
    for ia, alpha in enumerate(alphas):
        # d has shape (num_beta, r); all evidence terms reduce over r
        d = alpha + betas[:, None] * sigma2[None, :]
        inv_d2 = 1.0 / (d * d)
        mtm = (betas**2) * ((sigma2 * z2) @ inv_d2.T)
        residual = alpha * alpha * (z2 @ inv_d2.T) + delta
        logdet = np.sum(np.log(d), axis=1) + (dim - r) * math.log(alpha)
        values = (
            0.5 * n * log_betas
            + 0.5 * dim * math.log(alpha)
            - 0.5 * n * LOG_2PI
            - 0.5 * betas * residual
            - 0.5 * alpha * mtm
            - 0.5 * logdet
        )
        ib = int(np.argmax(values))
        if values[ib] > best[0]:
            best = (float(values[ib]), ia, ib)
    value, ia, ib = best
    return OracleResult(
        alpha=float(alphas[ia]),
        beta=float(betas[ib]),
        log_evidence=value,
        alpha_index=ia,
        beta_index=ib,
        grid=grid,
    )
