"""Memory store and retrieval, checked against a brute-force scan oracle."""

import math
import random

import pytest

from townsim.backends import HashingEmbedder
from townsim.errors import DimensionMismatchError, EmbedderError, EmptyTextError
from townsim.memory import cosine_similarity, new_memory_store


def oracle_cosine(a, b):
    # sequential sums: ties that are mathematically exact stay exact
    dot = sum(x * y for x, y in zip(a, b))
    na = sum(x * x for x in a)
    nb = sum(y * y for y in b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (math.sqrt(na) * math.sqrt(nb))


def brute_force_top_k(store, agent_id, query_vec, k):
    """Independent oracle: exhaustive cosine over every record, sorted with
    the same tie-break (similarity desc, tick desc, seq desc)."""
    scored = [
        (oracle_cosine(r.embedding, query_vec), r.tick, r.seq, r)
        for r in store.records_for(agent_id)
    ]
    scored.sort(key=lambda t: (-t[0], -t[1], -t[2]))
    return [t[3] for t in scored[:k]]


WORDS = [
    "store", "bob", "ada", "chicken", "counter", "stove", "tea", "work",
    "salary", "town", "mayor", "kitchen", "walk", "buy", "talk", "plan",
]


def random_text(rng):
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(2, 8)))


# --- cosine ------------------------------------------------------------------------


def test_cosine_identity():
    v = (0.3, -1.2, 4.0)
    assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-9)


def test_cosine_orthogonal():
    assert cosine_similarity((1.0, 0.0), (0.0, 1.0)) == 0.0


def test_cosine_hand_computed():
    # 32 / (sqrt(14) * sqrt(77))
    assert cosine_similarity((1, 2, 3), (4, 5, 6)) == pytest.approx(0.974631846, abs=1e-6)


def test_cosine_zero_vector_convention():
    assert cosine_similarity((0.0, 0.0), (1.0, 2.0)) == 0.0


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        cosine_similarity((1.0,), (1.0, 2.0))


# --- store ----------------------------------------------------------------------------


def test_store_assigns_seq_and_embedding():
    store = new_memory_store(HashingEmbedder(dim=64))
    record = store.store(1, "met Bob at the store", tick=12)
    assert record.seq == 1
    assert record.tick == 12
    assert len(record.embedding) == 64
    assert store.count(1) == 1


def test_store_empty_text_rejected():
    store = new_memory_store(HashingEmbedder(dim=64))
    with pytest.raises(EmptyTextError):
        store.store(1, "", tick=0)


def test_identical_texts_equal_embeddings_distinct_seq():
    store = new_memory_store(HashingEmbedder(dim=64))
    a = store.store(1, "same text", tick=1)
    b = store.store(1, "same text", tick=2)
    assert a.embedding == b.embedding
    assert (a.seq, b.seq) == (1, 2)


def test_broken_embedder_wrapped():
    class Broken:
        dim = 4

        def embed(self, text):
            raise RuntimeError("no service")

    store = new_memory_store(Broken())
    with pytest.raises(EmbedderError):
        store.store(1, "anything", tick=0)


# --- retrieval ---------------------------------------------------------------------------


def test_retrieve_empty_store():
    store = new_memory_store(HashingEmbedder(dim=64))
    assert store.retrieve(1, "anything", k=3) == []


def test_retrieve_exact_text_ranks_first():
    store = new_memory_store(HashingEmbedder(dim=64))
    store.store(1, "mayor talk town", tick=1)
    target = store.store(1, "met Bob at the store", tick=2)
    store.store(1, "stove tea kitchen", tick=3)
    top = store.retrieve(1, "met Bob at the store", k=1)
    assert top == [target]
    sim = cosine_similarity(top[0].embedding, store.embedder.embed("met Bob at the store"))
    assert sim == pytest.approx(1.0, abs=1e-9)


def test_retrieve_ties_break_by_tick_then_seq():
    store = new_memory_store(HashingEmbedder(dim=64))
    early = store.store(1, "chicken counter", tick=1)
    late = store.store(1, "chicken counter", tick=9)
    mid = store.store(1, "chicken counter", tick=5)
    got = store.retrieve(1, "chicken counter", k=3)
    assert got == [late, mid, early]


def test_retrieve_matches_brute_force_oracle_50_records():
    rng = random.Random(123)
    embedder = HashingEmbedder(dim=64)
    store = new_memory_store(embedder)
    for i in range(50):
        store.store(1, random_text(rng), tick=rng.randint(0, 30))
    for _ in range(20):
        query = random_text(rng)
        got = store.retrieve(1, query, k=5)
        expected = brute_force_top_k(store, 1, embedder.embed(query), 5)
        assert got == expected


def test_retrieve_k_prefix_property():
    rng = random.Random(7)
    store = new_memory_store(HashingEmbedder(dim=64))
    for _ in range(40):
        store.store(2, random_text(rng), tick=rng.randint(0, 10))
    for _ in range(10):
        query = random_text(rng)
        for k in (1, 3, 7):
            assert store.retrieve(2, query, k=k) == store.retrieve(2, query, k=k + 1)[:k]


def test_retrieve_never_mutates_store():
    store = new_memory_store(HashingEmbedder(dim=64))
    store.store(1, "alpha beta", tick=0)
    store.store(1, "gamma delta", tick=1)
    before = store.records_for(1)
    store.retrieve(1, "alpha", k=2)
    assert store.records_for(1) == before
    assert store.count(1) == 2


def test_per_agent_isolation():
    store = new_memory_store(HashingEmbedder(dim=64))
    store.store(1, "ada memory", tick=0)
    store.store(2, "bob memory", tick=0)
    assert [r.text for r in store.retrieve(1, "memory", k=5)] == ["ada memory"]


def test_snapshot_round_trip_of_records():
    store = new_memory_store(HashingEmbedder(dim=64))
    store.store(1, "first", tick=0)
    store.store(1, "second", tick=2)
    dumped = store.dump_records(1)
    fresh = new_memory_store(HashingEmbedder(dim=64))
    fresh.restore_records(1, dumped)
    assert fresh.records_for(1) == store.records_for(1)
    next_record = fresh.store(1, "third", tick=3)
    assert next_record.seq == 3
