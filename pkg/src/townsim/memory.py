"""Per-agent experience retention and retrieval over an embedding store.

Every experience is stored as timestamped text with an embedding vector.
Retrieval is an exact cosine-similarity scan over the agent's records (no
approximate index): the store stays desk-scale, and exactness is what lets
the test suite compare against a brute-force oracle record for record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DimensionMismatchError, EmbedderError, EmptyTextError


@dataclass(frozen=True)
class MemoryRecord:
    agent_id: int
    tick: int
    text: str
    embedding: tuple[float, ...]
    seq: int


def cosine_similarity(a, b) -> float:
    """dot(a,b) / (|a||b|), defined as 0.0 when either vector is zero."""
    if len(a) != len(b):
        raise DimensionMismatchError(f"vector dims differ: {len(a)} vs {len(b)}")
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (math.sqrt(na) * math.sqrt(nb))


@dataclass
class MemoryStore:
    """Embedding-backed memory records, grouped by agent.

    Mutation happens on the engine loop only; retrieval never mutates, so
    read-only access between ticks is safe from anywhere.
    """

    embedder: object
    dim: int
    _records: dict[int, list[MemoryRecord]] = field(default_factory=dict)
    _next_seq: dict[int, int] = field(default_factory=dict)

    def store(self, agent_id: int, text: str, tick: int, embedder=None) -> MemoryRecord:
        if not text:
            raise EmptyTextError("memory text must be non-empty")
        emb = embedder or self.embedder
        try:
            vector = tuple(emb.embed(text))
        except EmptyTextError:
            raise
        except Exception as exc:
            raise EmbedderError(f"embedder failed on {text[:40]!r}: {exc}") from exc
        if len(vector) != self.dim:
            raise DimensionMismatchError(
                f"embedder produced dim {len(vector)}, store expects {self.dim}"
            )
        seq = self._next_seq.get(agent_id, 1)
        record = MemoryRecord(agent_id=agent_id, tick=tick, text=text, embedding=vector, seq=seq)
        self._records.setdefault(agent_id, []).append(record)
        self._next_seq[agent_id] = seq + 1
        return record

    def retrieve(self, agent_id: int, query_text: str, k: int, embedder=None) -> list[MemoryRecord]:
        """The k records most cosine-similar to the query, best first.

        Ties break toward the higher tick (more recent experience), then
        the higher insertion seq.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        records = self._records.get(agent_id, [])
        if not records:
            return []
        emb = embedder or self.embedder
        try:
            query = tuple(emb.embed(query_text))
        except EmptyTextError:
            raise
        except Exception as exc:
            raise EmbedderError(f"embedder failed on query {query_text[:40]!r}: {exc}") from exc
        scored = [
            (cosine_similarity(r.embedding, query), r.tick, r.seq, r) for r in records
        ]
        scored.sort(key=lambda t: (-t[0], -t[1], -t[2]))
        return [t[3] for t in scored[:k]]

    def records_for(self, agent_id: int) -> list[MemoryRecord]:
        return list(self._records.get(agent_id, []))

    def count(self, agent_id: int | None = None) -> int:
        if agent_id is not None:
            return len(self._records.get(agent_id, []))
        return sum(len(v) for v in self._records.values())

    # snapshot plumbing

    def dump_records(self, agent_id: int) -> list[dict]:
        return [
            {"tick": r.tick, "text": r.text, "embedding": list(r.embedding), "seq": r.seq}
            for r in self._records.get(agent_id, [])
        ]

    def restore_records(self, agent_id: int, raw: list[dict]) -> None:
        restored = [
            MemoryRecord(
                agent_id=agent_id,
                tick=entry["tick"],
                text=entry["text"],
                embedding=tuple(entry["embedding"]),
                seq=entry["seq"],
            )
            for entry in raw
        ]
        self._records[agent_id] = restored
        self._next_seq[agent_id] = max((r.seq for r in restored), default=0) + 1


def new_memory_store(embedder) -> MemoryStore:
    return MemoryStore(embedder=embedder, dim=embedder.dim)
