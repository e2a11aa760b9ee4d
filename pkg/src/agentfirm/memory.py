"""Semantic memory: keyed entries retrieved by embedding similarity.

Entries are embedded once at insertion and retrieved by cosine similarity
against the query, gated by a threshold (default 0.7) and ranked best
first. Failure critiques live in the same store under digest-derived keys
and are embedded from the original task text, so a future similar task
surfaces the critique of the old mistake.

Two providers are built in. The hashing provider is a seeded character
n-gram feature hasher: fully deterministic, offline, and cheap, which is
what the test suite runs on. The sentence-transformer provider is a thin
optional wrapper over a real embedding model.

Persistence is a JSON-lines file rewritten on mutation; embeddings are
stored as plain JSON floats, which round-trip bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateKey,
    ProviderUnavailable,
    UnknownKey,
    ZeroVector,
)

KIND_FACT = "fact"
KIND_FAILURE_CRITIQUE = "failure-critique"
KINDS = (KIND_FACT, KIND_FAILURE_CRITIQUE)

DEFAULT_THRESHOLD = 0.7
DEFAULT_LIMIT = 5


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors.

    Raises DimensionMismatch for incompatible shapes and ZeroVector when
    either magnitude is zero. Always lands in [-1, 1] up to float error.
    """
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    if va.ndim != 1 or vb.ndim != 1:
        raise ValueError("cosine_similarity expects 1-d vectors")
    if va.shape[0] != vb.shape[0]:
        raise DimensionMismatch(f"dimensions differ: {va.shape[0]} vs {vb.shape[0]}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for zero vectors")
    return float(np.dot(va, vb) / (norm_a * norm_b))


class HashingEmbedder:
    """Deterministic embedding via seeded feature hashing of char trigrams.

    Not semantically deep, but similar strings share trigrams and land
    near each other, which is enough structure for threshold and ranking
    behavior to be exercised honestly. Same text, same seed: identical
    vector, on any machine.
    """

    def __init__(self, dimension: int = 64, seed: int = 0):
        if dimension < 2:
            raise ValueError("dimension must be at least 2")
        self.dimension = dimension
        self.seed = seed
        self.provider_id = f"hash-{dimension}-s{seed}"
        self._key = seed.to_bytes(8, "big", signed=True)

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        vec = np.zeros(self.dimension, dtype=float)
        if len(text) < 3:
            grams = [text]
        else:
            grams = [text[i : i + 3] for i in range(len(text) - 2)]
        for gram in grams:
            digest = hashlib.blake2b(
                gram.encode("utf-8"), digest_size=8, key=self._key
            ).digest()
            h = int.from_bytes(digest, "big")
            index = h % self.dimension
            sign = 1.0 if (h >> 8) & 1 else -1.0
            vec[index] += sign
        if not vec.any():
            # opposing grams can cancel; keep the nonempty-input guarantee
            vec[len(text) % self.dimension] = 1.0
        return vec / float(np.linalg.norm(vec))


class SentenceEmbedder:
    """Real sentence embeddings, constructed lazily.

    Anything that stops the model from loading (package absent, no
    network for weights) surfaces as ProviderUnavailable so callers can
    degrade instead of crashing.
    """

    def __init__(self, model_name: str = "all-MiniLM-L6-v2"):
        self.model_name = model_name
        self.provider_id = f"sentence-{model_name}"
        self._model = None
        self.dimension = 384

    def _load(self):
        if self._model is None:
            try:
                from sentence_transformers import SentenceTransformer

                self._model = SentenceTransformer(self.model_name)
                self.dimension = self._model.get_sentence_embedding_dimension()
            except Exception as exc:
                raise ProviderUnavailable(f"cannot load {self.model_name}: {exc}")
        return self._model

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("cannot embed empty text")
        model = self._load()
        try:
            return np.asarray(model.encode(text), dtype=float)
        except Exception as exc:
            raise ProviderUnavailable(f"embedding failed: {exc}")


def build_provider(name: str = "hashing", **options):
    if name in ("hashing", "hash", "hash-64"):
        return HashingEmbedder(
            dimension=int(options.get("dimension", 64)),
            seed=int(options.get("seed", 0)),
        )
    if name in ("sentence", "sentence-transformer"):
        return SentenceEmbedder(model_name=options.get("model_name", "all-MiniLM-L6-v2"))
    raise ProviderUnavailable(f"unknown embedding provider {name!r}")


@dataclass(frozen=True)
class MemoryEntry:
    key: str
    text: str
    kind: str
    embedding: tuple
    created_at: float
    source_text: str

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "text": self.text,
            "kind": self.kind,
            "embedding": list(self.embedding),
            "created_at": self.created_at,
            "source_text": self.source_text,
        }


@dataclass(frozen=True)
class RetrievedMemory:
    entry: MemoryEntry
    similarity: float


def critique_key(task_text: str) -> str:
    digest = hashlib.sha256(task_text.encode("utf-8")).hexdigest()
    return f"critique-{digest[:16]}"


class MemoryStore:
    """Keyed memory entries with linear-scan similarity retrieval.

    A linear scan is deliberate: stores here hold hundreds of entries,
    where an index would add failure modes without measurable gain.
    Mutations and reads are lock-guarded; parallel sessions share one
    store, and critiques land mid-run.
    """

    def __init__(self, provider, path: str | Path | None = None, clock=time.time):
        self._provider = provider
        self._clock = clock
        self._path = Path(path) if path is not None else None
        self._entries: dict[str, MemoryEntry] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            self._load(self._path)

    @property
    def provider(self):
        return self._provider

    def _load(self, path: Path) -> None:
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            entry = MemoryEntry(
                key=raw["key"],
                text=raw["text"],
                kind=raw["kind"],
                embedding=tuple(float(x) for x in raw["embedding"]),
                created_at=float(raw["created_at"]),
                source_text=raw.get("source_text", raw["text"]),
            )
            if len(entry.embedding) != self._provider.dimension:
                raise DimensionMismatch(
                    f"entry {entry.key!r} has dimension {len(entry.embedding)}, "
                    f"provider expects {self._provider.dimension}"
                )
            self._entries[entry.key] = entry

    def _persist(self) -> None:
        if self._path is None:
            return
        tmp = self._path.with_suffix(self._path.suffix + ".tmp")
        with open(tmp, "w") as fh:
            for entry in self._entries.values():
                fh.write(json.dumps(entry.to_dict(), separators=(",", ":")) + "\n")
        os.replace(tmp, self._path)

    def add_memory(self, key: str, text: str, kind: str = KIND_FACT) -> MemoryEntry:
        """Embed and store `text` under `key`. Keys are unique."""
        if not key or not key.strip():
            raise ValueError("key must be nonempty")
        if not text or not text.strip():
            raise ValueError("text must be nonempty")
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        with self._lock:
            if key in self._entries:
                raise DuplicateKey(key)
            return self._insert(key, text, kind, source_text=text)

    def _insert(self, key: str, text: str, kind: str, source_text: str) -> MemoryEntry:
        # caller holds the lock
        vector = self._provider.embed(source_text)
        entry = MemoryEntry(
            key=key,
            text=text,
            kind=kind,
            embedding=tuple(float(x) for x in vector),
            created_at=self._clock(),
            source_text=source_text,
        )
        self._entries[key] = entry
        self._persist()
        return entry

    def delete_memory(self, key: str) -> MemoryEntry:
        with self._lock:
            if key not in self._entries:
                raise UnknownKey(key)
            entry = self._entries.pop(key)
            self._persist()
        return entry

    def retrieve(
        self,
        query: str,
        threshold: float = DEFAULT_THRESHOLD,
        limit: int = DEFAULT_LIMIT,
    ) -> list:
        """Entries at least `threshold`-similar to the query, best first.

        Ties break on key so the ordering is total and reproducible.
        """
        if not query:
            raise ValueError("query must be nonempty")
        if not 0.0 <= threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if limit < 1:
            raise ValueError("limit must be at least 1")
        query_vec = self._provider.embed(query)
        with self._lock:
            snapshot = list(self._entries.values())
        scored = []
        for entry in snapshot:
            similarity = cosine_similarity(query_vec, entry.embedding)
            if similarity >= threshold:
                scored.append(RetrievedMemory(entry=entry, similarity=similarity))
        scored.sort(key=lambda r: (-r.similarity, r.entry.key))
        return scored[:limit]

    def record_failure_critique(
        self, task_text: str, wrong_answer: str, critique: str
    ) -> MemoryEntry:
        """Store (or replace) the critique for a failed task.

        The entry is keyed and embedded by the task text, so retrieval for
        a similar future task pulls the critique in; the stored text keeps
        the full story for the prompt.
        """
        for name, value in (
            ("task_text", task_text),
            ("wrong_answer", wrong_answer),
            ("critique", critique),
        ):
            if not value or not value.strip():
                raise ValueError(f"{name} must be nonempty")
        key = critique_key(task_text)
        text = (
            "Earlier failure on a similar task.\n"
            f"Task: {task_text}\n"
            f"Wrong answer: {wrong_answer}\n"
            f"Critique: {critique}"
        )
        with self._lock:
            self._entries.pop(key, None)
            return self._insert(key, text, KIND_FAILURE_CRITIQUE, source_text=task_text)

    def entries(self) -> list:
        with self._lock:
            return sorted(self._entries.values(), key=lambda e: e.key)

    def get(self, key: str) -> MemoryEntry:
        with self._lock:
            if key not in self._entries:
                raise UnknownKey(key)
            return self._entries[key]

    def __contains__(self, key: str) -> bool:
        with self._lock:
            return key in self._entries

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)
