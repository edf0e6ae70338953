"""Independent brute-force oracles.

Everything here recomputes metrics the slow, obviously-correct way (fresh
set intersections per depth, per-rank precision recounts, full sorts) and
must stay decoupled from the library implementations it checks.
"""

from __future__ import annotations

import math


def naive_rbo_uniform(s, t):
    """Uniform RBO via a fresh set intersection at every depth: O(k^2)."""
    assert len(s) == len(t)
    k = len(s)
    total = 0.0
    for d in range(1, k + 1):
        total += len(set(s[:d]) & set(t[:d])) / d
    return total / k


def naive_rbo_exponential(s, t, p):
    """Exponentially weighted RBO over the finite shared depth, naively."""
    assert len(s) == len(t)
    k = len(s)
    total = 0.0
    for d in range(1, k + 1):
        total += (p ** (d - 1)) * len(set(s[:d]) & set(t[:d])) / d
    return (1.0 - p) * total


def naive_average_precision(ranking, relevant):
    """AP by recounting the relevant prefix at every relevant rank."""
    precisions = []
    for rank, item in enumerate(ranking, 1):
        if item in relevant:
            hits = sum(1 for x in ranking[:rank] if x in relevant)
            precisions.append(hits / rank)
    return sum(precisions) / len(relevant)


def naive_rank(query_vec, corpus):
    """Sort-by-(-score, position) reference for the retrieval ranking.

    ``corpus`` is an ordered list of (id, vector); scores are plain dot
    products computed in Python floats.
    """
    scored = []
    for position, (item_id, vec) in enumerate(corpus):
        score = math.fsum(q * v for q, v in zip(query_vec, vec))
        scored.append((-score, position, item_id))
    scored.sort()
    return [item_id for _, _, item_id in scored]
