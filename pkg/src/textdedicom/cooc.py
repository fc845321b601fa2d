"""Distance-weighted co-occurrence counts and their PPMI transform."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from textdedicom.errors import InputError

MATRIX_MAGIC = b"TDMATRX1"
_HEADER = struct.Struct("<8sQ")


@dataclass(frozen=True)
class CoocMatrix:
    counts: np.ndarray
    window_size: int
    symmetric: bool

    @property
    def n(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class PpmiMatrix:
    values: np.ndarray
    total_mass: float
    row_mass: np.ndarray
    col_mass: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def element_mean(self) -> float:
        return float(self.values.mean())


def count_cooccurrences(corpus, window_size: int = 7, symmetric: bool = True,
                        zero_diagonal: bool = False) -> CoocMatrix:
    """Count context words within ``window_size`` positions, each weighted by 1/d.

    A base token at position p and a context token at p + d (1 <= d <= window)
    add 1/d to ``counts[base, context]``; with ``symmetric`` the mirrored entry
    gets the same mass, which is the same as a two-sided window. Windows stop at
    document boundaries.

    Accumulation is done in integers scaled by lcm(1..window) and divided once at
    the end, so every entry is the correctly rounded value of its exact rational
    sum regardless of visiting order.
    """
    if window_size < 1:
        raise InputError(f"window_size must be >= 1, got {window_size}")
    n = len(corpus.vocab)
    if n == 0 or corpus.num_tokens == 0:
        raise InputError("corpus is empty")

    scale = math.lcm(*range(1, window_size + 1))
    acc = np.zeros((n, n), dtype=np.int64)
    for doc in corpus.documents:
        tokens = np.asarray(doc.tokens, dtype=np.int64)
        for d in range(1, min(window_size, len(tokens) - 1) + 1):
            np.add.at(acc, (tokens[:-d], tokens[d:]), scale // d)
    if symmetric:
        acc = acc + acc.T
    if zero_diagonal:
        np.fill_diagonal(acc, 0)
    return CoocMatrix(acc / scale, window_size, symmetric)


def ppmi(cooc) -> PpmiMatrix:
    """Positive pointwise mutual information, natural log.

    ``S_ij = max(0, ln W_ij + ln N - ln N_i - ln N_j)`` where N is the total mass
    and N_i, N_j the row and column sums. Entries with ``W_ij == 0`` are exactly 0.
    Accepts a :class:`CoocMatrix` or a bare square array.
    """
    W = np.asarray(cooc.counts if isinstance(cooc, CoocMatrix) else cooc, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise InputError(f"co-occurrence matrix must be square, got shape {W.shape}")
    if np.any(W < 0) or not np.all(np.isfinite(W)):
        raise InputError("co-occurrence counts must be finite and non-negative")

    row_mass = W.sum(axis=1)
    # mirrored reductions can differ in the last ulp; reuse row sums to keep S exactly symmetric
    col_mass = row_mass.copy() if np.array_equal(W, W.T) else W.sum(axis=0)
    total = float(row_mass.sum())
    if total <= 0:
        raise InputError("co-occurrence matrix is all zero")

    values = np.zeros_like(W)
    nz = W > 0
    i, j = np.nonzero(nz)
    with np.errstate(divide="ignore"):
        log_row = np.log(row_mass)
        log_col = np.log(col_mass)
    pmi = np.log(W[i, j]) + (math.log(total) - (log_row[i] + log_col[j]))
    values[i, j] = np.maximum(pmi, 0.0)
    return PpmiMatrix(values, total, row_mass, col_mass)


def save_matrix(matrix, path) -> None:
    """Write a square float64 matrix: 8-byte magic, uint64 n, then row-major little-endian data."""
    a = np.asarray(getattr(matrix, "values", getattr(matrix, "counts", matrix)), dtype="<f8")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MATRIX_MAGIC, a.shape[0]))
        fh.write(np.ascontiguousarray(a).tobytes())


def load_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InputError(f"{path}: truncated matrix file")
    magic, n = _HEADER.unpack_from(data)
    if magic != MATRIX_MAGIC:
        raise InputError(f"{path}: not a matrix file (bad magic {magic!r})")
    body = data[_HEADER.size:]
    if len(body) != 8 * n * n:
        raise InputError(f"{path}: expected {n}x{n} float64 payload, got {len(body)} bytes")
    return np.frombuffer(body, dtype="<f8").reshape(n, n).astype(np.float64)
