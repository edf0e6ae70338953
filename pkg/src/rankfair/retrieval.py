"""Deterministic exhaustive dense retrieval over a corpus view.

Every corpus vector is scored against the query by cosine similarity (a dot
product, since vectors are unit-normalized at the provider boundary) and the
full ranking is returned.  Ties break by ascending corpus position, which is
identical across both gender views of the same corpus, so ties never show up
as spurious ranking disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_CLAMP_EPS = 1e-6


def normalize(vector: np.ndarray) -> np.ndarray:
    """Return the unit-length float64 copy of ``vector``.

    Zero-norm input is rejected: a vector without direction cannot rank.
    """
    arr = np.asarray(vector, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"expected a 1-d vector, got shape {arr.shape}")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValidationError("vector has zero or non-finite norm")
    return arr / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    value = float(np.dot(a, b))
    if value > 1.0 + _CLAMP_EPS or value < -1.0 - _CLAMP_EPS:
        raise ValidationError(f"cosine {value} outside [-1, 1]: inputs are not unit-normalized")
    return min(1.0, max(-1.0, value))


@dataclass(frozen=True)
class ScoredList:
    """Ids with their scores, non-increasing, position-tie-broken."""

    entries: tuple[tuple[str, float], ...]

    @property
    def ids(self) -> list[str]:
        return [item_id for item_id, _ in self.entries]


def rank_matrix(query_vec: np.ndarray, ids: list[str], matrix: np.ndarray) -> ScoredList:
    """Rank pre-stacked corpus vectors (rows of ``matrix``) for one query.

    Scores are computed in double precision; the sort is stable on descending
    score, so exact ties keep ascending corpus position.
    """
    if len(ids) == 0:
        raise ValidationError("corpus is empty")
    if matrix.shape[0] != len(ids):
        raise ValidationError(f"{len(ids)} ids for {matrix.shape[0]} vectors")
    query = np.asarray(query_vec, dtype=np.float64)
    if query.ndim != 1 or matrix.shape[1] != query.shape[0]:
        raise ValidationError(
            f"dimension mismatch: query {query.shape} vs corpus {matrix.shape[1:]}"
        )
    scores = matrix.astype(np.float64, copy=False) @ query
    np.clip(scores, -1.0, 1.0, out=scores)
    order = np.argsort(-scores, kind="stable")
    return ScoredList(entries=tuple((ids[i], float(scores[i])) for i in order))


def rank_corpus(
    query_vec: np.ndarray, corpus_vecs: list[tuple[str, np.ndarray]]
) -> tuple[list[str], ScoredList]:
    """Produce the full ranking of a corpus for one query vector.

    ``corpus_vecs`` is an ordered list of (id, unit vector); the order is the
    tie-break.  Returns the ranking (ids best-first) plus the scored list.
    """
    if not corpus_vecs:
        raise ValidationError("corpus is empty")
    ids = [item_id for item_id, _ in corpus_vecs]
    matrix = np.stack([np.asarray(vec, dtype=np.float64) for _, vec in corpus_vecs])
    scored = rank_matrix(query_vec, ids, matrix)
    return scored.ids, scored
