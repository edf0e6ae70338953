"""Providers: synthetic construction, file store, HTTP client, cache."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import StubEmbedServer
from protocol_suite import load_golden, run_protocol_suite
from rankfair.errors import ProviderError, UsageError
from rankfair.providers import (
    EmbeddingCache,
    FileProvider,
    HttpProvider,
    SyntheticProvider,
    embed_batch,
    make_provider,
    synthetic_embed,
    write_embedding_store,
)


class TestSyntheticEmbed:
    def test_same_input_bit_identical(self):
        a = synthetic_embed(42, "peluquera", 16, 0.5)
        b = synthetic_embed(42, "peluquera", 16, 0.5)
        assert np.array_equal(a, b)

    def test_unit_norm(self):
        v = synthetic_embed(9, "any text", 384, 2.0)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-9

    def test_weight_zero_pair_identical(self):
        f = synthetic_embed(3, "lemma#f", 12, 0.0)
        m = synthetic_embed(3, "lemma#m", 12, 0.0)
        assert np.array_equal(f, m)
        assert f[-1] == 0.0

    def test_weight_dominates_toward_antipodal(self):
        f = synthetic_embed(3, "x#f", 12, 1e3)
        m = synthetic_embed(3, "x#m", 12, 1e3)
        assert float(f @ m) == pytest.approx(-1.0, abs=1e-3)

    def test_no_suffix_means_no_gender_component(self):
        v = synthetic_embed(3, "plain title", 8, 5.0)
        assert v[-1] == 0.0

    def test_unknown_suffix_treated_as_lemma(self):
        with_hash = synthetic_embed(3, "odd#x", 8, 5.0)
        assert with_hash[-1] == 0.0

    def test_dim_too_small_rejected(self):
        with pytest.raises(ProviderError, match="dim"):
            synthetic_embed(1, "a", 1, 0.0)

    def test_different_seeds_differ(self):
        assert not np.array_equal(
            synthetic_embed(1, "a", 8, 0.0), synthetic_embed(2, "a", 8, 0.0)
        )

    @settings(max_examples=30, deadline=None)
    @given(st.text(min_size=1, max_size=20), st.integers(0, 2**32))
    def test_pair_distance_monotone_in_weight(self, lemma, seed):
        weights = [0.0, 0.1, 0.5, 1.0, 2.0, 10.0]
        cosines = []
        for w in weights:
            f = synthetic_embed(seed, f"{lemma}#f", 16, w)
            m = synthetic_embed(seed, f"{lemma}#m", 16, w)
            cosines.append(float(f @ m))
        assert cosines[0] == pytest.approx(1.0, abs=1e-12)
        for earlier, later in zip(cosines, cosines[1:]):
            assert later <= earlier + 1e-12


class TestSyntheticProvider:
    def test_batch_matches_singles(self):
        provider = SyntheticProvider(seed=5, gender_weight=0.7, dim=24)
        out = provider.embed_batch(["a#f", "a#m", "b"])
        for row, text in zip(out, ["a#f", "a#m", "b"]):
            assert np.array_equal(row, synthetic_embed(5, text, 24, 0.7))

    def test_role_ignored(self):
        provider = SyntheticProvider(seed=5, gender_weight=0.7, dim=8)
        q = provider.embed_batch(["x"], role="query")
        p = provider.embed_batch(["x"], role="passage")
        assert np.array_equal(q, p)

    def test_rejects_empty_texts(self):
        provider = SyntheticProvider(seed=1, dim=8)
        with pytest.raises(ProviderError):
            provider.embed_batch([])
        with pytest.raises(ProviderError):
            provider.embed_batch(["ok", "  "])

    def test_module_level_entry_point(self):
        provider = SyntheticProvider(seed=1, dim=8)
        assert np.array_equal(
            embed_batch(provider, ["x"], role="passage"), provider.embed_batch(["x"])
        )


class TestFileProvider:
    def test_lookup_renormalizes(self, tmp_path):
        path = tmp_path / "store.jsonl"
        write_embedding_store(path, {"a": np.array([2.0, 0.0]), "b": np.array([0.0, -3.0])})
        provider = FileProvider(path)
        assert provider.spec.dim == 2
        out = provider.embed_batch(["a", "b"])
        assert np.allclose(out[0], [1.0, 0.0])
        assert np.allclose(out[1], [0.0, -1.0])

    def test_round_trip_store(self, tmp_path):
        rng = np.random.default_rng(0)
        entries = {f"t{i}": rng.normal(size=6) for i in range(3)}
        path = tmp_path / "store.jsonl"
        write_embedding_store(path, entries)
        provider = FileProvider(path)
        out = provider.embed_batch(list(entries))
        for row, vec in zip(out, entries.values()):
            assert np.allclose(row, vec / np.linalg.norm(vec), atol=1e-12)

    def test_unknown_text_is_error(self, tmp_path):
        path = tmp_path / "store.jsonl"
        write_embedding_store(path, {"known": np.array([1.0, 0.0])})
        provider = FileProvider(path)
        with pytest.raises(ProviderError, match="not present"):
            provider.embed_batch(["unknown"])

    def test_zero_norm_vector_rejected_at_load(self, tmp_path):
        path = tmp_path / "store.jsonl"
        write_embedding_store(path, {"bad": np.array([0.0, 0.0])})
        with pytest.raises(ProviderError, match="norm"):
            FileProvider(path)

    def test_mixed_dims_rejected(self, tmp_path):
        path = tmp_path / "store.jsonl"
        path.write_text(
            '{"text": "a", "vector": [1.0, 0.0]}\n{"text": "b", "vector": [1.0]}\n',
            encoding="utf-8",
        )
        with pytest.raises(ProviderError, match="dim"):
            FileProvider(path)


class TestHttpProvider:
    def test_protocol_suite_against_stub(self):
        golden = load_golden()
        with StubEmbedServer(dim=golden["dim"], table=golden["vectors"]) as server:
            provider = HttpProvider(server.endpoint)
            assert provider.spec.model_name == "stub-model"
            run_protocol_suite(provider, golden, expect_exact_vectors=True)

    def test_batching_preserves_order(self):
        with StubEmbedServer(dim=3) as server:
            provider = HttpProvider(server.endpoint, batch_size=2)
            texts = [f"text {i}" for i in range(5)]
            out = provider.embed_batch(texts)
            assert out.shape == (5, 3)
            assert len(server.requests) == 3  # ceil(5 / 2)
            singles = np.stack([provider.embed_batch([t])[0] for t in texts])
            assert np.array_equal(out, singles)

    def test_non_200_is_provider_error(self):
        with StubEmbedServer() as server:
            provider = HttpProvider(server.endpoint)
            server.fail_next = 500
            with pytest.raises(ProviderError, match="500"):
                provider.embed_batch(["x"])

    def test_wrong_count_is_provider_error(self):
        with StubEmbedServer() as server:
            provider = HttpProvider(server.endpoint)
            server.bad_count = True
            with pytest.raises(ProviderError, match="vectors"):
                provider.embed_batch(["a", "b"])

    def test_unreachable_endpoint(self):
        with pytest.raises(ProviderError, match="unreachable"):
            HttpProvider("http://127.0.0.1:1")

    def test_env_var_overrides_endpoint(self, monkeypatch):
        with StubEmbedServer() as server:
            monkeypatch.setenv("RANKFAIR_EMBED_ENDPOINT", server.endpoint)
            provider = HttpProvider("http://127.0.0.1:1")  # dead address, env wins
            assert provider.endpoint == server.endpoint
            assert provider.embed_batch(["x"]).shape == (1, 4)

    def test_cache_prevents_repeat_requests(self, tmp_path):
        with StubEmbedServer() as server:
            provider = HttpProvider(server.endpoint, cache_dir=tmp_path)
            first = provider.embed_batch(["alpha", "beta"])
            requests_after_first = len(server.requests)
            second = provider.embed_batch(["alpha", "beta"])
            assert len(server.requests) == requests_after_first  # all hits
            assert np.array_equal(first, second)
            # a fresh provider reloads the shard from disk
            provider2 = HttpProvider(server.endpoint, cache_dir=tmp_path)
            third = provider2.embed_batch(["alpha", "beta"])
            assert len(server.requests) == requests_after_first + 0
            assert np.array_equal(first, third)

    def test_cache_distinguishes_roles(self, tmp_path):
        with StubEmbedServer() as server:
            provider = HttpProvider(server.endpoint, cache_dir=tmp_path)
            provider.embed_batch(["alpha"], role="query")
            count = len(server.requests)
            provider.embed_batch(["alpha"], role="passage")
            assert len(server.requests) == count + 1  # different role, cache miss

    def test_concurrent_embed_batch_calls(self):
        # no cache: every call must cross HTTP, from 8 threads at once
        from concurrent.futures import ThreadPoolExecutor

        with StubEmbedServer(dim=6) as server:
            provider = HttpProvider(server.endpoint)
            texts = [[f"t{i}-{j}" for j in range(5)] for i in range(8)]
            with ThreadPoolExecutor(max_workers=8) as pool:
                results = list(pool.map(provider.embed_batch, texts))
            for got, batch in zip(results, texts):
                assert np.array_equal(got, provider.embed_batch(batch))


class TestEmbeddingCache:
    def test_content_key_is_sha256(self):
        import hashlib

        assert EmbeddingCache.content_key("abogada") == hashlib.sha256(
            "abogada".encode()
        ).hexdigest()

    def test_put_get_round_trip(self, tmp_path):
        cache = EmbeddingCache(tmp_path, "model/x:1")
        vec = np.array([0.6, 0.8])
        cache.put("query", "text", vec)
        assert np.array_equal(cache.get("query", "text"), vec)
        assert cache.get("passage", "text") is None
        assert len(EmbeddingCache(tmp_path, "model/x:1")) == 1

    def test_shard_per_model(self, tmp_path):
        EmbeddingCache(tmp_path, "model-a").put("query", "t", np.array([1.0]))
        EmbeddingCache(tmp_path, "model-b").put("query", "t", np.array([1.0]))
        shards = sorted(p.name for p in tmp_path.glob("*.jsonl"))
        assert shards == ["model-a.jsonl", "model-b.jsonl"]


class TestMakeProvider:
    def test_synthetic_descriptor(self):
        provider = make_provider("synthetic:42,0.5")
        assert provider.spec.kind == "synthetic"
        assert provider.spec.dim == 384
        assert provider.spec.parameters["gender_weight"] == 0.5

    def test_synthetic_descriptor_with_dim(self):
        assert make_provider("synthetic:1,0,32").spec.dim == 32

    def test_file_descriptor(self, tmp_path):
        path = tmp_path / "s.jsonl"
        write_embedding_store(path, {"a": np.array([1.0, 0.0])})
        assert make_provider(f"file:{path}").spec.kind == "file"

    def test_bad_descriptors(self):
        with pytest.raises(UsageError):
            make_provider("synthetic")
        with pytest.raises(UsageError):
            make_provider("synthetic:1")
        with pytest.raises(UsageError):
            make_provider("quantum:foo")
