"""Ranking-comparison and ranking-quality metrics.

The bias metric is the uniform-weight rank-biased overlap at full depth:

    RBO(S, T) = (1/k) * sum_{d=1..k} |S[:d] & T[:d]| / d,   k = |S| = |T|

computed over two conjoint rankings (same item set, possibly different
order).  A classic exponentially weighted variant is provided separately and
is never substituted for the uniform form.  Ranking quality uses average
precision and MAP over binary relevance.

Prefix overlaps are maintained incrementally (one membership update per
depth), so a full-depth score over a k-item ranking costs O(k) instead of
the O(k^2) of recomputing each prefix intersection from scratch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

from .errors import ValidationError

Ranking = Sequence[Hashable]

DEFAULT_RBO_P = 0.98


@dataclass(frozen=True)
class MetricScore:
    """A metric value together with its name and the depth it was taken at."""

    value: float
    metric: str
    depth: int

    def as_dict(self) -> dict:
        return {"value": self.value, "metric": self.metric, "depth": self.depth}

    @classmethod
    def from_dict(cls, record: dict) -> "MetricScore":
        return cls(value=record["value"], metric=record["metric"], depth=record["depth"])


def _check_conjoint(s: Ranking, t: Ranking) -> int:
    k = len(s)
    if len(t) != k:
        raise ValidationError(f"rankings differ in length: {k} vs {len(t)}")
    if k == 0:
        raise ValidationError("rankings are empty")
    s_set, t_set = set(s), set(t)
    if len(s_set) != k or len(t_set) != k:
        raise ValidationError("ranking contains duplicate ids")
    if s_set != t_set:
        # Both rankings must come from the same corpus view; anything else
        # is a pipeline bug upstream, not a property of the data.
        raise ValidationError("rankings are not conjoint (different id sets)")
    return k


def overlap_at_depth(s: Ranking, t: Ranking, d: int) -> int:
    """Size of the intersection of the two depth-``d`` prefixes."""
    if d < 1 or d > min(len(s), len(t)):
        raise ValidationError(f"depth {d} out of range for lengths {len(s)}, {len(t)}")
    return len(set(s[:d]) & set(t[:d]))


def _prefix_overlaps(s: Ranking, t: Ranking, k: int) -> list[int]:
    """Overlap |s[:d] & t[:d]| for every d in 1..k, in O(k) total work.

    Items that agree at a position are never added to the membership sets:
    with duplicate-free inputs they cannot be seen again, and skipping them
    keeps each depth to O(1) set operations.
    """
    seen_s: set = set()
    seen_t: set = set()
    overlap = 0
    overlaps: list[int] = []
    for d in range(k):
        x, y = s[d], t[d]
        if x == y:
            overlap += 1
        else:
            seen_s.add(x)
            seen_t.add(y)
            if x in seen_t:
                overlap += 1
            if y in seen_s:
                overlap += 1
        overlaps.append(overlap)
    return overlaps


def rbo_uniform(s: Ranking, t: Ranking) -> MetricScore:
    """Uniform-weight RBO at full depth over two conjoint rankings.

    Returns 1.0 exactly iff the rankings are identical.  Summation runs in
    increasing depth through ``math.fsum``, so results are deterministic and
    drift-free up to depths of ~1e5.
    """
    k = _check_conjoint(s, t)
    overlaps = _prefix_overlaps(s, t, k)
    value = math.fsum(x_d / d for d, x_d in enumerate(overlaps, 1)) / k
    return MetricScore(value=value, metric="rbo_uniform", depth=k)


def rbo_exponential(s: Ranking, t: Ranking, p: float = DEFAULT_RBO_P) -> MetricScore:
    """Exponentially weighted RBO over the finite shared depth.

    Weight at depth d is (1-p) * p^(d-1); identical lists score 1 - p^k, so
    the range is [0, 1).  This is the conventional top-weighted variant, kept
    clearly separate from the uniform form used for bias scores.
    """
    if not (0.0 < p < 1.0):
        raise ValidationError(f"p must lie strictly inside (0, 1), got {p}")
    k = _check_conjoint(s, t)
    overlaps = _prefix_overlaps(s, t, k)
    value = (1.0 - p) * math.fsum(
        (p ** (d - 1)) * x_d / d for d, x_d in enumerate(overlaps, 1)
    )
    # Unlike the uniform form, per-term rounding here can overshoot the
    # exact value (1 - p^k at most) by an ulp; clamp to the documented range.
    value = min(1.0, max(0.0, value))
    return MetricScore(value=value, metric=f"rbo_exponential(p={p})", depth=k)


def reversed_list_rbo(k: int) -> float:
    """Closed-form uniform RBO between a k-item ranking and its reverse.

    The depth-d prefixes of a list and its reverse share max(0, 2d-k) items,
    so the score is (1/k) * sum_d max(0, 2d-k)/d.  This equals 0.5 at k = 2
    and k = 3 and decreases toward 1 - ln 2 ~= 0.3069 as k grows; it is the
    reference curve for the worst same-corpus disagreement at large depth.
    """
    if k < 1:
        raise ValidationError("k must be positive")
    return math.fsum(max(0, 2 * d - k) / d for d in range(1, k + 1)) / k


def average_precision(ranking: Ranking, relevant: set) -> MetricScore:
    """Mean of precision-at-rank over the ranks holding relevant items.

    Undefined for an empty relevant set; callers skip such queries and
    account for them separately.
    """
    if not relevant:
        raise ValidationError("average precision is undefined for an empty relevant set")
    ranking_ids = set(ranking)
    if len(ranking_ids) != len(ranking):
        raise ValidationError("ranking contains duplicate ids")
    missing = set(relevant) - ranking_ids
    if missing:
        raise ValidationError(f"relevant ids missing from ranking: {sorted(missing)!r}")
    hits = 0
    terms = []
    for rank, item in enumerate(ranking, 1):
        if item in relevant:
            hits += 1
            terms.append(hits / rank)
    value = math.fsum(terms) / len(relevant)
    return MetricScore(value=value, metric="average_precision", depth=len(ranking))


def mean_average_precision(aps: Sequence[MetricScore]) -> MetricScore:
    """Arithmetic mean of per-query average precision scores."""
    if not aps:
        raise ValidationError("MAP over an empty list of queries is undefined")
    value = math.fsum(score.value for score in aps) / len(aps)
    return MetricScore(value=value, metric="map", depth=max(score.depth for score in aps))
