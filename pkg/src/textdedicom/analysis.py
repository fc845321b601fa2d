"""Topic assignment, ranked topic words, cosine neighbors and embedding export.

Topic indices are 0-based in code and rendered 1-based in reports.
All ties (argmax, sorting by probability, sorting by similarity) go to the
lowest index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from textdedicom.errors import InputError


@dataclass(frozen=True)
class TopicAssignment:
    word_index: int
    topic: int
    probability: float


@dataclass
class TopicReport:
    topics: list  # dicts: index, count, words[(word, probability)]
    affinity: np.ndarray | None  # None for factorizations without an affinity matrix
    symmetry_score: float | None

    def to_dict(self) -> dict:
        return {
            "topics": [
                {
                    "index": t["index"] + 1,
                    "count": t["count"],
                    "words": [{"word": w, "probability": p} for w, p in t["words"]],
                }
                for t in self.topics
            ],
            "affinity": None if self.affinity is None else self.affinity.tolist(),
            "symmetry_score": self.symmetry_score,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_text(self) -> str:
        lines = []
        for t in self.topics:
            lines.append(f"Topic {t['index'] + 1} (#{t['count']})")
            for rank, (w, p) in enumerate(t["words"], 1):
                lines.append(f"  {rank:>2}  {p:.2f}  {w}")
        if self.symmetry_score is not None:
            lines.append(f"symmetry score {self.symmetry_score:.4g}")
        return "\n".join(lines)


@dataclass
class NeighborTable:
    query: str
    neighbors: list = field(default_factory=list)  # (word, similarity)

    def to_dict(self) -> dict:
        return {"query": self.query,
                "neighbors": [{"word": w, "similarity": s} for w, s in self.neighbors]}

    def to_text(self) -> str:
        width = max([len(self.query)] + [len(w) for w, _ in self.neighbors])
        lines = [f"{0:>2}  {self.query:<{width}}  {1.0:+.4f}"]
        lines += [f"{i:>2}  {w:<{width}}  {s:+.4f}" for i, (w, s) in enumerate(self.neighbors, 1)]
        return "\n".join(lines)


def _matrix(A_prime) -> np.ndarray:
    return np.asarray(getattr(A_prime, "A_prime", A_prime), dtype=np.float64)


def assign_topics(A_prime) -> list:
    """Map each word to the topic holding its largest loading."""
    A = _matrix(A_prime)
    topics = np.argmax(A, axis=1)  # first maximum wins
    return [TopicAssignment(i, int(t), float(A[i, t])) for i, t in enumerate(topics)]


def symmetry_score(R) -> float:
    R = np.asarray(R, dtype=np.float64)
    return float(np.linalg.norm(R - R.T) / max(np.linalg.norm(R), 1e-30))


def topic_report(A_prime, R, vocab, top_m: int = 10) -> TopicReport:
    if top_m < 1:
        raise InputError(f"top_m must be >= 1, got {top_m}")
    A = _matrix(A_prime)
    if len(vocab) != A.shape[0]:
        raise InputError(f"vocab has {len(vocab)} words, A' has {A.shape[0]} rows")
    groups = {t: [] for t in range(A.shape[1])}
    for a in assign_topics(A):
        groups[a.topic].append(a)
    topics = []
    for t, members in groups.items():
        members.sort(key=lambda a: (-a.probability, a.word_index))
        topics.append({
            "index": t,
            "count": len(members),
            "words": [(vocab[a.word_index], a.probability) for a in members[:top_m]],
        })
    if R is None:
        return TopicReport(topics, None, None)
    R = np.array(R, dtype=np.float64)
    return TopicReport(topics, R, symmetry_score(R))


def cosine_similarities(embeddings, query_index: int) -> np.ndarray:
    """Cosine similarity of every row against the query row; NaN where a row has zero norm."""
    E = np.asarray(embeddings, dtype=np.float64)
    norms = np.linalg.norm(E, axis=1)
    if norms[query_index] == 0:
        raise InputError(f"query row {query_index} has zero norm")
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = (E @ E[query_index]) / (norms * norms[query_index])
    sims[norms == 0] = np.nan
    return np.clip(sims, -1.0, 1.0)


def nearest_neighbors(embeddings, query_index: int, count: int = 4, vocab=None) -> NeighborTable:
    """Top ``count`` rows by cosine similarity to the query row, query excluded."""
    E = np.asarray(embeddings, dtype=np.float64)
    n = E.shape[0]
    if not 0 <= query_index < n:
        raise InputError(f"query index {query_index} out of range for {n} rows")
    if not 1 <= count < n:
        raise InputError(f"count must be in [1, {n - 1}], got {count}")
    sims = cosine_similarities(E, query_index)
    candidates = [i for i in range(n) if i != query_index and not np.isnan(sims[i])]
    candidates.sort(key=lambda i: (-sims[i], i))
    names = vocab if vocab is not None else [str(i) for i in range(n)]
    return NeighborTable(names[query_index],
                         [(names[i], float(sims[i])) for i in candidates[:count]])


def topic_neighbors(report: TopicReport, embeddings, vocab, words_per_topic=2, count=4) -> list:
    """Neighbor tables for the top ``words_per_topic`` words of every topic."""
    E = np.asarray(embeddings, dtype=np.float64)
    index = {w: i for i, w in enumerate(vocab)}
    tables = []
    for t in report.topics:
        for word, _ in t["words"][:words_per_topic]:
            if np.any(E[index[word]] != 0):
                tables.append(nearest_neighbors(E, index[word], count, vocab))
    return tables


def explain_pair(A_prime, R, i: int, j: int) -> np.ndarray:
    """Per-topic-pair contributions ``C[b, c] = A'[i, b] R[b, c] A'[j, c]`` to entry (i, j)."""
    A = _matrix(A_prime)
    R = np.asarray(R, dtype=np.float64)
    n = A.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise InputError(f"indices ({i}, {j}) out of range for n={n}")
    return A[i][:, None] * R * A[j][None, :]


def export_embeddings(embeddings, vocab, path) -> None:
    """Write ``n k`` then one ``word v1 ... vk`` line per word, 17 significant digits."""
    E = np.asarray(embeddings, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] != len(vocab):
        raise InputError(f"embeddings {E.shape} do not match {len(vocab)} words")
    lines = [f"{E.shape[0]} {E.shape[1]}"]
    for word, row in zip(vocab, E):
        lines.append(" ".join([word] + [format(x, ".17g") for x in row]))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write embeddings to {path}: {exc}") from exc


def load_embeddings(path):
    """Inverse of :func:`export_embeddings`; returns ``(vocab, matrix)``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read embeddings from {path}: {exc}") from exc
    lines = text.splitlines()
    n, k = (int(x) for x in lines[0].split())
    vocab, rows = [], []
    for line in lines[1:n + 1]:
        parts = line.split(" ")
        vocab.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    E = np.array(rows, dtype=np.float64).reshape(n, k)
    return vocab, E
