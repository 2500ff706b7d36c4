"""Word vectors in word2vec text format and cosine similarity."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict  # lemma -> np.ndarray of shape (dim,)

    def __post_init__(self):
        if self.dim < 1:
            raise EmbeddingError("dim must be positive")
        for word, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise EmbeddingError(f"vector for {word!r} has length {vec.shape[0]}, expected {self.dim}")
            if not np.any(vec):
                raise EmbeddingError(f"zero vector for {word!r}")

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[word]

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path) -> EmbeddingTable:
    vectors: dict = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingError("header must be 'count dim'")
        count, dim = int(header[0]), int(header[1])
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if len(values) != dim:
                raise EmbeddingError(f"dimension mismatch for {word!r}: {len(values)} values, header says {dim}")
            vec = np.array([float(v) for v in values], dtype=np.float64)
            if not np.any(vec):
                raise EmbeddingError(f"zero vector for {word!r}")
            if word in vectors:
                logger.warning("duplicate embedding row for %r; keeping the last one", word)
            vectors[word] = vec
    if len(vectors) != count:
        logger.warning("header declares %d vectors, loaded %d", count, len(vectors))
    return EmbeddingTable(dim, vectors)


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vectors)} {table.dim}\n")
        for word, vec in table.vectors.items():
            fh.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def cosine_sim(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"length mismatch: {u.shape} vs {v.shape}")
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise EmbeddingError("cosine similarity of a zero vector is undefined")
    # normalise first so that scaling either argument cannot change the result
    sim = float((u / nu) @ (v / nv))
    return min(1.0, max(-1.0, sim))
