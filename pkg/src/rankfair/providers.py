"""Embedding providers: file-backed store, synthetic gender-dial, HTTP client.

All providers share one contract: ``embed_batch(texts, role)`` returns one
unit-normalized float64 vector per text, order preserved, every vector of the
provider's dimension.  Normalization happens here, at the provider boundary,
so downstream cosine similarity is a plain dot product and nothing can be
double-normalized.

The synthetic provider is a calibration instrument, not just a test helper:
its ``gender_weight`` dial controls exactly how far apart the two members of
a gendered pair embed, which makes bias scores interpretable end to end
without any model.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import requests

from .errors import ProviderError, UsageError
from .retrieval import normalize

ENDPOINT_ENV_VAR = "RANKFAIR_EMBED_ENDPOINT"

GENDER_MARKER = "#"
_GENDER_SIGNS = {"f": 1.0, "m": -1.0}

DEFAULT_SYNTHETIC_DIM = 384
DEFAULT_HTTP_BATCH = 64
DEFAULT_HTTP_TIMEOUT = 30.0


@dataclass(frozen=True)
class ProviderSpec:
    """Identity and configuration of an embedding provider."""

    kind: str  # file | synthetic | http
    model_name: str
    dim: int
    endpoint: str | None = None
    parameters: Mapping[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "model_name": self.model_name,
            "dim": self.dim,
            "endpoint": self.endpoint,
            "parameters": dict(self.parameters),
        }


def _check_texts(texts: Iterable[str]) -> list[str]:
    texts = list(texts)
    if not texts:
        raise ProviderError("embed_batch needs at least one text")
    for text in texts:
        if not isinstance(text, str) or not text.strip():
            raise ProviderError(f"cannot embed empty text {text!r}")
    return texts


# ---------------------------------------------------------------------------
# Synthetic gender-dial embedder
# ---------------------------------------------------------------------------
#
# Deterministic construction, documented so it reproduces everywhere:
#   1. split the text at the last "#" into (lemma, suffix); suffix "f" maps
#      to +1, "m" to -1, anything else means the whole text is the lemma and
#      the gender sign is 0;
#   2. key = mix64(seed XOR first-8-bytes-big-endian(SHA-256(lemma)));
#   3. draw 64-bit words w_j = mix64(key + j * GOLDEN), j = 1, 2, ...  where
#      mix64 is the splitmix64 finalizer;
#   4. turn word pairs into Gaussians via Box-Muller on their top 53 bits;
#   5. first dim-1 coordinates = the Gaussian block scaled to unit length,
#      last coordinate = gender_weight * sign; renormalize.
#
# With gender_weight 0 the "#f" and "#m" forms of one lemma embed
# identically (a gender-blind model); as the weight grows their cosine falls
# as (1 - w^2)/(1 + w^2) toward -1.

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = 0xFFFFFFFFFFFFFFFF
_TWO_NEG_53 = 2.0 ** -53


def _mix64(x: np.ndarray) -> np.ndarray:
    # Modular 64-bit wraparound is the point; silence numpy's overflow note.
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _MIX_1
        x = (x ^ (x >> np.uint64(27))) * _MIX_2
        return x ^ (x >> np.uint64(31))


def _lemma_key(seed: int, lemma: str) -> np.uint64:
    digest = hashlib.sha256(lemma.encode("utf-8")).digest()
    lemma64 = int.from_bytes(digest[:8], "big")
    return _mix64(np.uint64((seed & _U64_MASK) ^ lemma64))


def split_gender_marker(text: str) -> tuple[str, float]:
    """Split ``lemma#f`` / ``lemma#m`` into (lemma, gender sign)."""
    if GENDER_MARKER in text:
        lemma, suffix = text.rsplit(GENDER_MARKER, 1)
        if suffix in _GENDER_SIGNS and lemma:
            return lemma, _GENDER_SIGNS[suffix]
    return text, 0.0


def _gaussian_block(keys: np.ndarray, count: int) -> np.ndarray:
    """(len(keys), count) standard Gaussians from the documented stream."""
    pairs = (count + 1) // 2
    idx = np.arange(1, 2 * pairs + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        counters = keys[:, None] + idx[None, :] * _GOLDEN
    words = _mix64(counters)
    # Top 53 bits give uniforms; +1 keeps u1 inside (0, 1] so log is finite.
    u1 = ((words[:, :pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_NEG_53
    u2 = (words[:, pairs:] >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    gauss = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    return gauss[:, :count]


def synthetic_embed_batch(
    seed: int, texts: list[str], dim: int, gender_weight: float
) -> np.ndarray:
    """Vectorized synthetic embedding of many texts at once."""
    if dim < 2:
        raise ProviderError(f"synthetic embedder needs dim >= 2, got {dim}")
    if gender_weight < 0:
        raise ProviderError(f"gender_weight must be >= 0, got {gender_weight}")
    lemmas_signs = [split_gender_marker(text) for text in texts]
    keys = np.array([_lemma_key(seed, lemma) for lemma, _ in lemmas_signs], dtype=np.uint64)
    block = _gaussian_block(keys, dim - 1)
    norms = np.linalg.norm(block, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ProviderError("synthetic embedder produced a zero-norm vector")
    vectors = np.empty((len(texts), dim), dtype=np.float64)
    vectors[:, :-1] = block / norms
    vectors[:, -1] = [gender_weight * sign for _, sign in lemmas_signs]
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors


def synthetic_embed(seed: int, text: str, dim: int, gender_weight: float) -> np.ndarray:
    """Embed one text with the synthetic gender-dial construction."""
    return synthetic_embed_batch(seed, [text], dim, gender_weight)[0]


class SyntheticProvider:
    """Deterministic gender-dial provider; ``role`` is accepted and ignored."""

    def __init__(self, seed: int = 0, gender_weight: float = 0.0, dim: int = DEFAULT_SYNTHETIC_DIM):
        if dim < 2:
            raise ProviderError(f"synthetic embedder needs dim >= 2, got {dim}")
        self.seed = int(seed)
        self.gender_weight = float(gender_weight)
        self.spec = ProviderSpec(
            kind="synthetic",
            model_name=f"synthetic-gender-dial(seed={self.seed},weight={self.gender_weight:g})",
            dim=dim,
            parameters={"seed": self.seed, "gender_weight": self.gender_weight},
        )

    def embed_batch(self, texts: Iterable[str], role: str = "query") -> np.ndarray:
        texts = _check_texts(texts)
        return synthetic_embed_batch(self.seed, texts, self.spec.dim, self.gender_weight)


# ---------------------------------------------------------------------------
# File-backed store
# ---------------------------------------------------------------------------


class FileProvider:
    """Looks vectors up in a JSONL store of {"text": ..., "vector": [...]}."""

    def __init__(self, path: str | Path, model_name: str | None = None):
        self.path = Path(path)
        self._vectors: dict[str, np.ndarray] = {}
        dim = None
        try:
            with self.path.open(encoding="utf-8") as fh:
                for line_no, raw in enumerate(fh, 1):
                    raw = raw.strip()
                    if not raw:
                        continue
                    try:
                        record = json.loads(raw)
                        text, vector = record["text"], record["vector"]
                    except (json.JSONDecodeError, KeyError, TypeError) as exc:
                        raise ProviderError(f"{self.path}:{line_no}: bad store record") from exc
                    try:
                        unit = normalize(np.asarray(vector, dtype=np.float64))
                    except Exception as exc:
                        raise ProviderError(f"{self.path}:{line_no}: {exc}") from exc
                    if dim is None:
                        dim = unit.shape[0]
                    elif unit.shape[0] != dim:
                        raise ProviderError(
                            f"{self.path}:{line_no}: dim {unit.shape[0]} != store dim {dim}"
                        )
                    self._vectors[text] = unit
        except OSError as exc:
            raise ProviderError(f"cannot read embedding store {self.path}: {exc}") from exc
        if dim is None:
            raise ProviderError(f"embedding store {self.path} is empty")
        self.spec = ProviderSpec(
            kind="file", model_name=model_name or self.path.stem, dim=int(dim)
        )

    def embed_batch(self, texts: Iterable[str], role: str = "query") -> np.ndarray:
        texts = _check_texts(texts)
        rows = []
        for text in texts:
            vector = self._vectors.get(text)
            if vector is None:
                raise ProviderError(f"text not present in embedding store: {text!r}")
            rows.append(vector)
        return np.stack(rows)


def write_embedding_store(path: str | Path, entries: Mapping[str, np.ndarray]) -> None:
    """Write a file-provider store; inverse of loading one."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for text, vector in entries.items():
            record = {"text": text, "vector": [float(x) for x in np.asarray(vector)]}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# Embedding cache (one JSONL shard per model)
# ---------------------------------------------------------------------------


def _shard_name(model_name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", model_name) + ".jsonl"


class EmbeddingCache:
    """Write-through JSONL cache keyed by SHA-256 of the exact text bytes.

    Entries also record the embedding role: models with role-specific input
    prefixes return different vectors for the same text as a query versus a
    passage.  Reads are lock-free on the in-memory map; writes serialize.
    """

    def __init__(self, directory: str | Path, model_name: str):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.path = self.directory / _shard_name(model_name)
        self._entries: dict[tuple[str, str], np.ndarray] = {}
        self._lock = threading.Lock()
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for raw in fh:
                    raw = raw.strip()
                    if not raw:
                        continue
                    record = json.loads(raw)
                    key = (record.get("role", "query"), record["content_key"])
                    self._entries[key] = np.asarray(record["vector"], dtype=np.float64)

    @staticmethod
    def content_key(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def get(self, role: str, text: str) -> np.ndarray | None:
        return self._entries.get((role, self.content_key(text)))

    def put(self, role: str, text: str, vector: np.ndarray) -> None:
        key = self.content_key(text)
        record = {
            "text": text,
            "content_key": key,
            "role": role,
            "vector": [float(x) for x in np.asarray(vector)],
        }
        with self._lock:
            if (role, key) in self._entries:
                return
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            self._entries[(role, key)] = np.asarray(record["vector"], dtype=np.float64)

    def __len__(self) -> int:
        return len(self._entries)


# ---------------------------------------------------------------------------
# HTTP client for the embedding sidecar
# ---------------------------------------------------------------------------


class HttpProvider:
    """Client for the embedding sidecar wire protocol.

    Resolves model name and dimension from ``GET /v1/info`` at construction.
    The ``RANKFAIR_EMBED_ENDPOINT`` environment variable overrides the
    configured endpoint.  Batches are sent sequentially and each response is
    validated for count, dimension and norm before use.
    """

    def __init__(
        self,
        endpoint: str,
        batch_size: int = DEFAULT_HTTP_BATCH,
        timeout: float = DEFAULT_HTTP_TIMEOUT,
        cache_dir: str | Path | None = None,
        session: requests.Session | None = None,
    ):
        self.endpoint = os.environ.get(ENDPOINT_ENV_VAR) or endpoint
        self.endpoint = self.endpoint.rstrip("/")
        self.batch_size = int(batch_size)
        self.timeout = float(timeout)
        # requests.Session is not safe to share across threads; unless the
        # caller injects one (and owns that concern), keep one per thread so
        # concurrent embed_batch calls stay safe.
        self._shared_session = session
        self._local = threading.local()
        info = self._get_info()
        self.spec = ProviderSpec(
            kind="http", model_name=info["model"], dim=int(info["dim"]), endpoint=self.endpoint
        )
        if self.spec.dim < 1:
            raise ProviderError(f"sidecar reports non-positive dim {self.spec.dim}")
        self._cache = (
            EmbeddingCache(cache_dir, self.spec.model_name) if cache_dir is not None else None
        )

    @property
    def _session(self) -> requests.Session:
        if self._shared_session is not None:
            return self._shared_session
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def _get_info(self) -> dict:
        url = f"{self.endpoint}/v1/info"
        try:
            response = self._session.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderError(f"embedding endpoint unreachable: {url}: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(f"GET {url} returned {response.status_code}")
        try:
            info = response.json()
            _ = info["model"], info["dim"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"malformed /v1/info body from {url}") from exc
        return info

    def _embed_remote(self, texts: list[str], role: str) -> list[np.ndarray]:
        url = f"{self.endpoint}/v1/embed"
        try:
            response = self._session.post(
                url, json={"texts": texts, "role": role}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ProviderError(f"embedding endpoint unreachable: {url}: {exc}") from exc
        if response.status_code != 200:
            raise ProviderError(
                f"POST {url} returned {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
            vectors = body["vectors"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"malformed /v1/embed body from {url}") from exc
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError(
                f"sidecar returned {len(vectors) if isinstance(vectors, list) else '?'} vectors "
                f"for {len(texts)} texts"
            )
        rows = []
        for text, vector in zip(texts, vectors):
            arr = np.asarray(vector, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != self.spec.dim:
                raise ProviderError(
                    f"sidecar vector for {text!r} has shape {arr.shape}, expected ({self.spec.dim},)"
                )
            try:
                rows.append(normalize(arr))
            except Exception as exc:
                raise ProviderError(f"sidecar returned bad vector for {text!r}: {exc}") from exc
        return rows

    def embed_batch(self, texts: Iterable[str], role: str = "query") -> np.ndarray:
        texts = _check_texts(texts)
        out: dict[int, np.ndarray] = {}
        misses: list[int] = []
        if self._cache is not None:
            for i, text in enumerate(texts):
                hit = self._cache.get(role, text)
                if hit is not None:
                    out[i] = hit
                else:
                    misses.append(i)
        else:
            misses = list(range(len(texts)))

        for start in range(0, len(misses), self.batch_size):
            chunk = misses[start : start + self.batch_size]
            rows = self._embed_remote([texts[i] for i in chunk], role)
            for i, row in zip(chunk, rows):
                out[i] = row
                if self._cache is not None:
                    self._cache.put(role, texts[i], row)

        return np.stack([out[i] for i in range(len(texts))])


# ---------------------------------------------------------------------------
# Factory
# ---------------------------------------------------------------------------

Provider = SyntheticProvider | FileProvider | HttpProvider


def make_provider(descriptor: str, cache_dir: str | Path | None = None) -> Provider:
    """Build a provider from a CLI descriptor.

    Grammar: ``file:<path>`` | ``synthetic:<seed>,<weight>[,<dim>]`` |
    ``http:<url>``.
    """
    kind, sep, rest = descriptor.partition(":")
    if not sep:
        raise UsageError(f"provider descriptor needs a kind prefix: {descriptor!r}")
    if kind == "file":
        return FileProvider(rest)
    if kind == "synthetic":
        parts = rest.split(",") if rest else []
        if len(parts) not in (2, 3):
            raise UsageError(
                f"synthetic provider wants 'synthetic:<seed>,<weight>[,<dim>]', got {descriptor!r}"
            )
        try:
            seed = int(parts[0])
            weight = float(parts[1])
            dim = int(parts[2]) if len(parts) == 3 else DEFAULT_SYNTHETIC_DIM
        except ValueError as exc:
            raise UsageError(f"bad synthetic provider parameters in {descriptor!r}") from exc
        return SyntheticProvider(seed=seed, gender_weight=weight, dim=dim)
    if kind == "http":
        return HttpProvider(rest, cache_dir=cache_dir)
    raise UsageError(f"unknown provider kind {kind!r} in {descriptor!r}")


def embed_batch(provider: Provider, texts: Iterable[str], role: str = "query") -> np.ndarray:
    """Uniform entry point mirroring the provider contract."""
    return provider.embed_batch(texts, role=role)
