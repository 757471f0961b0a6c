"""Rank-correlation metrics and hub ranking reports.

Two correlations are provided: plain Kendall tau (every pair weighted
equally, ties contribute zero) and the additive-hyperbolic weighted tau,
which up-weights pairs involving top-ranked items.  The weighted variant
follows the standard definition for rankings with ties: element weights
are 1/(1 + rank) with ranks taken in decreasing lexicographic order, the
statistic is normalized tau_b-style, and the reported value is the average
over ranking by score and ranking by ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

TRUTH_DIRECTIONS = ("higher_better", "lower_better")


@dataclass(frozen=True, eq=False)
class ScorePair:
    """Aligned metric scores and ground-truth transfer performance.

    Scores are always higher-is-better.  ``truth_direction`` says how to
    read the truths; ``lower_better`` (e.g. mean squared error) negates
    them before any pairwise comparison.
    """

    scores: np.ndarray
    truths: np.ndarray
    truth_direction: str = "higher_better"

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        t = np.asarray(self.truths, dtype=np.float64)
        if s.ndim != 1 or t.ndim != 1:
            raise InputError("scores and truths must be 1-D")
        if s.shape != t.shape:
            raise InputError(f"score/truth length mismatch: {s.shape[0]} vs {t.shape[0]}")
        if s.shape[0] < 2:
            raise InputError("need at least 2 models to correlate")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
            raise InputError("scores and truths must be finite")
        if self.truth_direction not in TRUTH_DIRECTIONS:
            raise InputError(f"truth_direction must be one of {TRUTH_DIRECTIONS}")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "truths", t)

    def oriented_truths(self) -> np.ndarray:
        if self.truth_direction == "lower_better":
            return -self.truths
        return self.truths


def kendall_tau(pair: ScorePair) -> float:
    """Plain Kendall tau: (concordant - discordant) / total pairs.

    Tied pairs (in either variable) count as neither, sign comparisons are
    exact.
    """
    t = pair.oriented_truths()
    s = pair.scores
    m = s.shape[0]
    total = 0.0
    for i in range(m - 1):
        total += float(np.sum(np.sign(t[i] - t[i + 1 :]) * np.sign(s[i] - s[i + 1 :])))
    return 2.0 * total / (m * (m - 1))


def _lex_ranks_desc(primary: np.ndarray, secondary: np.ndarray) -> np.ndarray:
    """0-based rank of each element in decreasing (primary, secondary) order."""
    order = np.lexsort((secondary, primary))[::-1]
    ranks = np.empty(order.size, dtype=np.intp)
    ranks[order] = np.arange(order.size)
    return ranks


def _weighted_tau_single(x: np.ndarray, y: np.ndarray, ranks: np.ndarray) -> float:
    weights = 1.0 / (1.0 + ranks)
    numerator = 0.0
    tot = 0.0
    tied_x = 0.0
    tied_y = 0.0
    m = x.shape[0]
    for i in range(m - 1):
        pair_w = weights[i] + weights[i + 1 :]
        sx = np.sign(x[i] - x[i + 1 :])
        sy = np.sign(y[i] - y[i + 1 :])
        numerator += float(np.sum(pair_w * sx * sy))
        tot += float(np.sum(pair_w))
        tied_x += float(np.sum(pair_w[sx == 0]))
        tied_y += float(np.sum(pair_w[sy == 0]))
    denominator = math.sqrt((tot - tied_x) * (tot - tied_y))
    if denominator == 0.0:
        return math.nan
    return numerator / denominator


def weighted_tau(pair: ScorePair) -> float:
    """Additive-hyperbolic weighted Kendall tau.

    Returns NaN when one of the variables is completely tied (the
    normalization vanishes and the statistic is undefined).
    """
    t = pair.oriented_truths()
    s = pair.scores
    by_t = _weighted_tau_single(t, s, _lex_ranks_desc(t, s))
    by_s = _weighted_tau_single(t, s, _lex_ranks_desc(s, t))
    return 0.5 * (by_t + by_s)


# ---------------------------------------------------------------------------
# hub ranking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankedModel:
    model_id: str
    score: float
    rank: int
    truth: float | None = None


@dataclass(frozen=True)
class RankReport:
    """Scored models in descending score order, plus rank correlations.

    ``tau``/``tau_w`` are filled only when ground truths were provided and
    the statistic is defined; otherwise ``tau_note`` says why they are
    absent.  Score ties are broken by ascending model id so that re-ranking
    the same input is reproducible.
    """

    entries: tuple[RankedModel, ...]
    tau: float | None = None
    tau_w: float | None = None
    tau_note: str | None = None
    truth_direction: str = "higher_better"

    @property
    def ordering(self) -> list[str]:
        return [e.model_id for e in self.entries]

    def top_k(self, k: int) -> list[str]:
        if k <= 0:
            raise InputError(f"k must be positive, got {k}")
        return self.ordering[: min(k, len(self.entries))]

    def to_dict(self) -> dict:
        return {
            "models": [
                {
                    "id": e.model_id,
                    "score": e.score,
                    "rank": e.rank,
                    **({"truth": e.truth} if e.truth is not None else {}),
                }
                for e in self.entries
            ],
            "tau": self.tau,
            "tau_w": self.tau_w,
            "tau_note": self.tau_note,
            "truth_direction": self.truth_direction,
        }


def rank_hub(
    scored_models: list[tuple[str, float]],
    truths: list[float] | None = None,
    truth_direction: str = "higher_better",
) -> RankReport:
    """Order models by score and, when truths are known, correlate them."""
    if not scored_models:
        raise InputError("need at least one scored model")
    ids = [mid for mid, _ in scored_models]
    if len(set(ids)) != len(ids):
        dupes = sorted({m for m in ids if ids.count(m) > 1})
        raise InputError(f"duplicate model ids: {dupes}")
    if truths is not None and len(truths) != len(scored_models):
        raise InputError("truths must align with scored_models")

    order = sorted(
        range(len(scored_models)),
        key=lambda i: (-scored_models[i][1], scored_models[i][0]),
    )
    entries = tuple(
        RankedModel(
            model_id=scored_models[i][0],
            score=float(scored_models[i][1]),
            rank=pos + 1,
            truth=float(truths[i]) if truths is not None else None,
        )
        for pos, i in enumerate(order)
    )

    tau = tau_w = None
    note = None
    if truths is None:
        note = "no ground truths provided"
    elif len(scored_models) < 2:
        note = "need at least 2 models to correlate"
    else:
        pair = ScorePair(
            scores=np.array([s for _, s in scored_models]),
            truths=np.array(truths),
            truth_direction=truth_direction,
        )
        tau = kendall_tau(pair)
        tw = weighted_tau(pair)
        if math.isnan(tw):
            tau_w = None
            note = "weighted tau undefined: a variable is completely tied"
        else:
            tau_w = tw
    return RankReport(
        entries=entries,
        tau=tau,
        tau_w=tau_w,
        tau_note=note,
        truth_direction=truth_direction,
    )
