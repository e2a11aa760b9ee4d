"""Memory tests: cosine oracle, embedder invariants, retrieval, persistence."""

from __future__ import annotations

import math
import random
import string

import numpy as np
import pytest

from agentfirm.errors import (
    DimensionMismatch,
    DuplicateKey,
    ProviderUnavailable,
    UnknownKey,
    ZeroVector,
)
from agentfirm.memory import (
    HashingEmbedder,
    MemoryStore,
    build_provider,
    cosine_similarity,
    critique_key,
)


# --- cosine similarity against a frozen oracle ---


def test_cosine_known_value() -> None:
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([4.0, 5.0, 6.0])
    # 32 / (sqrt(14) * sqrt(77)), computed once by hand and frozen
    assert cosine_similarity(a, b) == pytest.approx(0.9746318461970762, abs=1e-12)


def test_cosine_bounds_and_symmetry() -> None:
    rng = random.Random(13)
    for _ in range(500):
        dim = rng.randrange(2, 16)
        a = np.array([rng.uniform(-5, 5) for _ in range(dim)])
        b = np.array([rng.uniform(-5, 5) for _ in range(dim)])
        if not a.any() or not b.any():
            continue
        s = cosine_similarity(a, b)
        assert -1.0 - 1e-9 <= s <= 1.0 + 1e-9
        assert s == pytest.approx(cosine_similarity(b, a), abs=1e-12)
        assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-9)
        assert cosine_similarity(a, 2.5 * a) == pytest.approx(1.0, abs=1e-9)
        assert cosine_similarity(a, -a) == pytest.approx(-1.0, abs=1e-9)


def test_cosine_input_validation() -> None:
    with pytest.raises(DimensionMismatch):
        cosine_similarity(np.ones(3), np.ones(4))
    with pytest.raises(ZeroVector):
        cosine_similarity(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        cosine_similarity(np.ones((2, 2)), np.ones((2, 2)))


# --- hashing embedder ---


def test_embedder_deterministic_and_normalized() -> None:
    provider = HashingEmbedder()
    texts = ["hello world", "x", "the quick brown fox", "hello world"]
    for text in texts:
        v1 = provider.embed(text)
        v2 = provider.embed(text)
        assert np.array_equal(v1, v2)
        assert v1.shape == (64,)
        assert np.linalg.norm(v1) == pytest.approx(1.0, abs=1e-9)
    assert np.array_equal(provider.embed(texts[0]), provider.embed(texts[3]))
    with pytest.raises(ValueError):
        provider.embed("")


def test_embedder_seed_changes_vectors_dimension_respected() -> None:
    base = HashingEmbedder(seed=0).embed("same text")
    other = HashingEmbedder(seed=1).embed("same text")
    assert not np.array_equal(base, other)
    wide = HashingEmbedder(dimension=128).embed("same text")
    assert wide.shape == (128,)
    assert HashingEmbedder(dimension=128, seed=3).provider_id == "hash-128-s3"


def test_embedder_similar_texts_score_higher() -> None:
    provider = HashingEmbedder()
    query = provider.embed("the cat sat on the mat")
    near = provider.embed("the cat sat on a mat")
    far = provider.embed("quarterly revenue projections for fiscal 2031")
    assert cosine_similarity(query, near) > cosine_similarity(query, far)


def test_build_provider_names() -> None:
    assert isinstance(build_provider("hashing"), HashingEmbedder)
    assert build_provider("hashing", dimension=32).dimension == 32
    with pytest.raises(ProviderUnavailable):
        build_provider("nonsense")


# --- store: add, delete, retrieve ---


def make_store(path=None):
    return MemoryStore(HashingEmbedder(), path=path)


def test_add_and_duplicate_and_delete() -> None:
    store = make_store()
    store.add_memory("k1", "the user prefers metric units")
    assert "k1" in store
    assert len(store) == 1
    with pytest.raises(DuplicateKey):
        store.add_memory("k1", "something else")
    with pytest.raises(ValueError):
        store.add_memory("", "no key")
    with pytest.raises(ValueError):
        store.add_memory("k2", "   ")
    store.delete_memory("k1")
    assert "k1" not in store
    with pytest.raises(UnknownKey):
        store.delete_memory("k1")


def test_retrieve_thresholds_and_order() -> None:
    store = make_store()
    store.add_memory("m1", "the cat sat on the mat")
    store.add_memory("m2", "a cat sat on the mat today")
    store.add_memory("m3", "completely unrelated quantum chromodynamics")
    hits = store.retrieve("the cat sat on a mat", threshold=0.0, limit=10)
    assert [h.entry.key for h in hits][:2] == ["m1", "m2"] or [
        h.entry.key for h in hits
    ][:2] == ["m2", "m1"]
    sims = [h.similarity for h in hits]
    assert sims == sorted(sims, reverse=True)
    # raising the threshold can only shrink the hit set
    for low, high in [(0.0, 0.3), (0.3, 0.7), (0.7, 0.95)]:
        low_keys = {h.entry.key for h in store.retrieve("the cat sat", threshold=low)}
        high_keys = {h.entry.key for h in store.retrieve("the cat sat", threshold=high)}
        assert high_keys <= low_keys


def test_retrieve_limit_and_validation() -> None:
    store = make_store()
    for i in range(8):
        store.add_memory(f"k{i}", f"shared prefix variant {i}")
    assert len(store.retrieve("shared prefix variant", threshold=0.0, limit=3)) == 3
    with pytest.raises(ValueError):
        store.retrieve("q", threshold=1.5)
    with pytest.raises(ValueError):
        store.retrieve("q", threshold=-0.1)
    with pytest.raises(ValueError):
        store.retrieve("q", limit=0)
    with pytest.raises(ValueError):
        store.retrieve("")


def test_retrieve_ties_break_by_key() -> None:
    store = make_store()
    store.add_memory("b", "identical text")
    store.add_memory("a", "identical text")
    hits = store.retrieve("identical text", threshold=0.9)
    assert [h.entry.key for h in hits] == ["a", "b"]


def test_retrieve_matches_brute_force() -> None:
    rng = random.Random(21)
    store = make_store()
    provider = HashingEmbedder()
    texts = {}
    for i in range(60):
        words = [
            "".join(rng.choices(string.ascii_lowercase, k=rng.randrange(2, 8)))
            for _ in range(rng.randrange(1, 10))
        ]
        texts[f"k{i:03d}"] = " ".join(words)
        store.add_memory(f"k{i:03d}", texts[f"k{i:03d}"])
    for _ in range(25):
        query = " ".join(
            "".join(rng.choices(string.ascii_lowercase, k=4)) for _ in range(3)
        )
        threshold = rng.choice([0.0, 0.2, 0.5, 0.8])
        qv = provider.embed(query)
        expected = sorted(
            (
                (-cosine_similarity(qv, provider.embed(text)), key)
                for key, text in texts.items()
                if cosine_similarity(qv, provider.embed(text)) >= threshold
            ),
        )[:5]
        got = store.retrieve(query, threshold=threshold, limit=5)
        assert [h.entry.key for h in got] == [key for _, key in expected]
        for hit, (neg_sim, _) in zip(got, expected):
            assert hit.similarity == pytest.approx(-neg_sim, abs=1e-12)


# --- failure critiques ---


def test_failure_critique_stored_and_replaced() -> None:
    store = make_store()
    task = "compute 2 + 2"
    stored = store.record_failure_critique(task, "5", "arithmetic slip, recheck sums")
    key = stored.key
    assert key == critique_key(task)
    entry = store.get(key)
    assert entry.kind == "failure-critique"
    assert "arithmetic slip" in entry.text
    assert "Wrong answer: 5" in entry.text
    # same task again: replace, not duplicate
    store.record_failure_critique(task, "22", "string concatenation, not addition")
    assert len(store) == 1
    assert "string concatenation" in store.get(key).text


def test_failure_critique_retrieved_by_task_similarity() -> None:
    store = make_store()
    store.record_failure_critique(
        "convert 10 miles to kilometers", "10", "forgot the conversion factor"
    )
    hits = store.retrieve("convert 12 miles to kilometers", threshold=0.3)
    assert any(h.entry.kind == "failure-critique" for h in hits)


def test_critique_key_is_stable_and_distinct() -> None:
    assert critique_key("task A") == critique_key("task A")
    assert critique_key("task A") != critique_key("task B")
    assert critique_key("task A").startswith("critique-")


# --- persistence ---


def test_persistence_round_trip_bit_exact(tmp_path) -> None:
    path = str(tmp_path / "memory.jsonl")
    store = make_store(path)
    store.add_memory("alpha", "first fact")
    store.add_memory("beta", "second fact about cats")
    store.record_failure_critique("some task", "bad", "why it was bad")
    store.delete_memory("alpha")

    reloaded = MemoryStore(HashingEmbedder(), path=path)
    assert len(reloaded) == 2
    for entry in store.entries():
        twin = reloaded.get(entry.key)
        assert twin.text == entry.text
        assert twin.kind == entry.kind
        assert twin.created_at == entry.created_at
        assert twin.embedding == entry.embedding  # bit-exact tuples


def test_persistence_rejects_wrong_dimension(tmp_path) -> None:
    path = str(tmp_path / "memory.jsonl")
    store = MemoryStore(HashingEmbedder(dimension=32), path=path)
    store.add_memory("k", "text")
    with pytest.raises(DimensionMismatch):
        MemoryStore(HashingEmbedder(dimension=64), path=path)


def test_math_sanity_norm_of_loaded_embedding(tmp_path) -> None:
    path = str(tmp_path / "memory.jsonl")
    store = make_store(path)
    store.add_memory("k", "normalized on the way in")
    reloaded = MemoryStore(HashingEmbedder(), path=path)
    vec = np.array(reloaded.get("k").embedding)
    assert math.isclose(float(np.linalg.norm(vec)), 1.0, abs_tol=1e-9)
