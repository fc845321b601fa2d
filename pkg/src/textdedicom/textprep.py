"""Text preprocessing: tokenization, stopword filtering and vocabulary indexing.

Tokenization rule: after NFC normalization and lowercasing, a token is a
maximal run of Unicode letters (``str.isalpha``), optionally joined by inner
apostrophes ("you're"). Tokens that match the stopword list are dropped as
whole words first, then the survivors are split on their apostrophes and every
piece is filtered again. Digits, punctuation and anything else that is not a
letter act as separators.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from textdedicom.errors import InputError

CORPUS_MAGIC = "textdedicom-corpus"
CORPUS_VERSION = 1

_APOSTROPHES = re.compile(r"['’]")


def load_stopwords(path=None) -> frozenset:
    """Read a stopword file (one token per line, ``#`` comments allowed).

    Without a path the bundled English list is used.
    """
    if path is None:
        text = resources.files("textdedicom.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line.replace("’", "'"))
    return frozenset(words)


@dataclass(frozen=True)
class PreprocessConfig:
    stopwords: frozenset = field(default_factory=load_stopwords)
    min_token_length: int = 2
    lowercase: bool = True

    def __post_init__(self):
        if self.min_token_length < 1:
            raise InputError(f"min_token_length must be >= 1, got {self.min_token_length}")


@dataclass(frozen=True)
class Document:
    id: str
    raw_text: str
    tokens: tuple  # vocabulary indices


@dataclass(frozen=True)
class Corpus:
    documents: tuple
    vocab: tuple
    shuffle_seed: int

    @property
    def vocab_index(self) -> dict:
        return {w: i for i, w in enumerate(self.vocab)}

    @property
    def n(self) -> int:
        return len(self.vocab)

    @property
    def num_tokens(self) -> int:
        return sum(len(d.tokens) for d in self.documents)

    def to_json(self) -> str:
        payload = {
            "magic": CORPUS_MAGIC,
            "version": CORPUS_VERSION,
            "shuffle_seed": self.shuffle_seed,
            "vocab": list(self.vocab),
            "documents": [
                {"id": d.id, "raw_text": d.raw_text, "tokens": list(d.tokens)} for d in self.documents
            ],
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Corpus":
        payload = json.loads(text)
        if payload.get("magic") != CORPUS_MAGIC:
            raise InputError("not a corpus cache file")
        if payload.get("version") != CORPUS_VERSION:
            raise InputError(f"unsupported corpus cache version {payload.get('version')}")
        docs = tuple(
            Document(d["id"], d["raw_text"], tuple(d["tokens"])) for d in payload["documents"]
        )
        return cls(docs, tuple(payload["vocab"]), payload["shuffle_seed"])

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Corpus":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _words(text: str):
    """Maximal runs of letters, allowing single apostrophes between letters."""
    buf = []
    for ch in text:
        if ch.isalpha() or (ch in "'’" and buf and buf[-1].isalpha()):
            buf.append(ch)
        elif buf:
            yield "".join(buf).rstrip("'’")
            buf = []
    if buf:
        yield "".join(buf).rstrip("'’")


def _keep(token: str, config: PreprocessConfig) -> bool:
    return len(token) >= config.min_token_length and token not in config.stopwords


def preprocess(raw_text: str, config: PreprocessConfig | None = None) -> list:
    """Turn raw text into the ordered list of surviving word strings."""
    config = config or PreprocessConfig()
    text = unicodedata.normalize("NFC", raw_text)
    if config.lowercase:
        text = text.lower()
    out = []
    for word in _words(text):
        word = word.replace("’", "'")
        if word in config.stopwords:
            continue
        for piece in _APOSTROPHES.split(word):
            if _keep(piece, config):
                out.append(piece)
    return out


def shuffled(items: Sequence, seed: int) -> list:
    """Fisher-Yates shuffle driven by numpy's PCG64 generator.

    For i = len-1 down to 1, swap position i with j drawn uniformly from
    [0, i] via ``Generator(PCG64(seed)).integers(0, i + 1)``.
    """
    out = list(items)
    rng = np.random.Generator(np.random.PCG64(seed))
    for i in range(len(out) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        out[i], out[j] = out[j], out[i]
    return out


def build_corpus(
    documents: Iterable[tuple],
    config: PreprocessConfig | None = None,
    shuffle_seed: int = 0,
) -> Corpus:
    """Preprocess ``(id, raw_text)`` pairs and index them against a shuffled vocabulary.

    The vocabulary starts in first-occurrence order across documents and is then
    permuted with :func:`shuffled`, so the matrix layout carries no trace of
    article order.
    """
    config = config or PreprocessConfig()
    seen_ids = set()
    words_per_doc = []
    first_seen = {}
    for doc_id, raw_text in documents:
        if doc_id in seen_ids:
            raise InputError(f"duplicate document id: {doc_id!r}")
        seen_ids.add(doc_id)
        words = preprocess(raw_text, config)
        for w in words:
            first_seen.setdefault(w, len(first_seen))
        words_per_doc.append((doc_id, raw_text, words))

    vocab = tuple(shuffled(list(first_seen), shuffle_seed))
    index = {w: i for i, w in enumerate(vocab)}
    docs = tuple(
        Document(doc_id, raw_text, tuple(index[w] for w in words))
        for doc_id, raw_text, words in words_per_doc
    )
    return Corpus(docs, vocab, shuffle_seed)
