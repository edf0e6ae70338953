"""Encoders the sidecar can serve.

Two families:

* ``st:<model id>``: a sentence-transformers checkpoint (multilingual E5,
  paraphrase-MiniLM, multilingual USE ports, ...).  E5-style models need
  role prefixes on their inputs; they are applied here, inside the sidecar,
  so clients always send raw job-title strings.
* ``hash:<dim>``: a deterministic hash-based encoder with no weights.  It
  keeps the wire protocol fully testable on machines that cannot load any
  real model, and doubles as a fast smoke-test target.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Published usage for E5-family checkpoints: queries and passages carry
# distinct instruction prefixes.
E5_ROLE_PREFIXES = {"query": "query: ", "passage": "passage: "}


class EncoderError(Exception):
    """The encoder could not produce vectors."""


class HashEncoder:
    """Weight-free deterministic encoder: one unit vector per distinct text.

    Vectors are seeded from SHA-256 of the text bytes, so they are stable
    across processes and platforms.  The role is ignored.
    """

    def __init__(self, dim: int = 384):
        if dim < 2:
            raise ValueError(f"hash encoder needs dim >= 2, got {dim}")
        self.name = f"hash-{dim}"
        self.dim = dim

    def encode(self, texts: list[str], role: str) -> np.ndarray:
        rows = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            digest = hashlib.sha256(text.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "big")
            rng = np.random.default_rng(seed)
            vector = rng.standard_normal(self.dim)
            rows[i] = vector / np.linalg.norm(vector)
        return rows


class SentenceTransformerEncoder:
    """A frozen sentence-transformers checkpoint behind the wire protocol."""

    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:  # pragma: no cover - environment dependent
            raise EncoderError(
                "sentence-transformers is not installed; "
                "install rankfair-sidecar[models]"
            ) from exc
        try:
            self._model = SentenceTransformer(model_id)
        except Exception as exc:  # pragma: no cover - needs model weights
            raise EncoderError(f"could not load model {model_id!r}: {exc}") from exc
        self.name = model_id
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self._prefixes = E5_ROLE_PREFIXES if "e5" in model_id.lower() else {}

    def encode(self, texts: list[str], role: str) -> np.ndarray:
        prefix = self._prefixes.get(role, "")
        vectors = self._model.encode(
            [prefix + text for text in texts],
            normalize_embeddings=True,
            convert_to_numpy=True,
            show_progress_bar=False,
        )
        return np.asarray(vectors, dtype=np.float64)


def make_encoder(descriptor: str):
    """Build an encoder from ``hash:<dim>`` or ``st:<model id>``.

    A bare descriptor without a known prefix is treated as a
    sentence-transformers model id.
    """
    kind, sep, rest = descriptor.partition(":")
    if kind == "hash" and sep:
        try:
            dim = int(rest)
        except ValueError:
            raise ValueError(f"hash encoder wants 'hash:<dim>', got {descriptor!r}") from None
        return HashEncoder(dim)
    if kind == "st" and sep:
        return SentenceTransformerEncoder(rest)
    return SentenceTransformerEncoder(descriptor)
