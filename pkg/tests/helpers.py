"""Fixture generators and brute-force oracles shared by the test modules."""

import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from textdedicom.textprep import Corpus, Document

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "src" / "textdedicom" / "data" / "fixtures"
CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def index_corpus(token_lists, vocab_size=None):
    """Corpus straight from index lists, bypassing text preprocessing."""
    n = vocab_size or (max((max(t) for t in token_lists if t), default=0) + 1)
    docs = tuple(Document(f"d{i}", "", tuple(int(x) for x in t)) for i, t in enumerate(token_lists))
    return Corpus(docs, tuple(f"w{i}" for i in range(n)), 0)


def topical_corpus(n_words=60, n_topics=3, n_docs=30, doc_len=150, seed=0):
    """Documents drawn from one topic each; topic words are 8x more likely."""
    rng = np.random.default_rng(seed)
    topic_of = np.arange(n_words) % n_topics
    lists = []
    for _ in range(n_docs):
        t = rng.integers(n_topics)
        p = np.where(topic_of == t, 8.0, 1.0)
        lists.append(rng.choice(n_words, size=doc_len, p=p / p.sum()).tolist())
    return index_corpus(lists, n_words)


def planted_blocks(seed, blocks=3, size=20):
    """Symmetric co-occurrence mass concentrated in diagonal blocks, rows permuted."""
    rng = np.random.default_rng(seed)
    n = blocks * size
    labels = np.repeat(np.arange(blocks), size)
    same = labels[:, None] == labels[None, :]
    W = np.where(same, rng.uniform(5, 10, (n, n)), rng.uniform(0, 0.5, (n, n)))
    W = W + W.T
    perm = rng.permutation(n)
    return W[np.ix_(perm, perm)], labels[perm]


def cooc_oracle(token_lists, n, window, symmetric=True):
    """Exact rational co-occurrence mass from every position pair."""
    acc = [[Fraction(0)] * n for _ in range(n)]
    for tokens in token_lists:
        for p in range(len(tokens)):
            for q in range(len(tokens)):
                d = q - p
                if 1 <= d <= window:
                    acc[tokens[p]][tokens[q]] += Fraction(1, d)
                    if symmetric:
                        acc[tokens[q]][tokens[p]] += Fraction(1, d)
    return np.array([[float(x) for x in row] for row in acc])


def ppmi_oracle(W):
    n = len(W)
    N = sum(W[i][j] for i in range(n) for j in range(n))
    Ni = [sum(W[i][j] for j in range(n)) for i in range(n)]
    Nj = [sum(W[i][j] for i in range(n)) for j in range(n)]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if W[i][j] > 0:
                pmi = math.log(W[i][j]) + math.log(N) - math.log(Ni[i]) - math.log(Nj[j])
                out[i, j] = max(0.0, pmi)
    return out


def reconstruct_oracle(A, R):
    n, k = A.shape
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = sum(A[i, b] * R[b, c] * A[j, c] for b in range(k) for c in range(k))
    return out


def softmax_znorm_oracle(A_raw):
    n, k = A_raw.shape
    out = np.zeros((n, k))
    mu = [sum(A_raw[i, b] for i in range(n)) / n for b in range(k)]
    sd = [math.sqrt(sum((A_raw[i, b] - mu[b]) ** 2 for i in range(n)) / n) for b in range(k)]
    for i in range(n):
        z = [(A_raw[i, b] - mu[b]) / sd[b] for b in range(k)]
        e = [math.exp(x) for x in z]
        out[i] = [x / sum(e) for x in e]
    return out


def loss_oracle(S, A_raw, R):
    A = softmax_znorm_oracle(A_raw)
    rec = reconstruct_oracle(A, R)
    n = len(S)
    return sum((S[i][j] - rec[i][j]) ** 2 for i in range(n) for j in range(n))


def finite_difference(f, X, h=1e-5):
    G = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        old = X[idx]
        X[idx] = old + h
        up = f()
        X[idx] = old - h
        down = f()
        X[idx] = old
        G[idx] = (up - down) / (2 * h)
    return G


def max_relative_error(analytic, numeric, floor=1e-6):
    """Entrywise |a - n| / max(|a|, |n|, floor); the floor guards near-zero entries."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))
