"""Reference factorizations scored with the same squared Frobenius loss.

* NMF with Lee-Seung multiplicative updates, ``S ~ W H``.
* Truncated SVD, ``S ~ U diag(sigma) V^T`` (the rank-k optimum).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from textdedicom.dedicom import TrainTrace
from textdedicom.errors import InputError, NumericError

NMF_DELTA = 1e-12


@dataclass
class NmfModel:
    W: np.ndarray  # n x k
    H: np.ndarray  # k x n

    def reconstruction(self) -> np.ndarray:
        return self.W @ self.H

    @property
    def num_parameters(self) -> int:
        return self.W.size + self.H.size

    @property
    def embeddings(self) -> np.ndarray:
        return self.W


@dataclass
class SvdModel:
    U: np.ndarray  # n x k
    Sigma: np.ndarray  # k, non-increasing
    V: np.ndarray  # n x k

    def reconstruction(self) -> np.ndarray:
        return (self.U * self.Sigma) @ self.V.T

    @property
    def num_parameters(self) -> int:
        return self.U.size + self.V.size + self.Sigma.size ** 2

    @property
    def embeddings(self) -> np.ndarray:
        return self.U * self.Sigma


def parameter_counts(n: int, k: int) -> dict:
    """Trainable parameter counts of the three factorizations for an n x n target."""
    return {"dedicom": n * k + k * k, "nmf": 2 * n * k, "svd": 2 * n * k + k * k}


def common_loss(S, reconstruction) -> float:
    S = np.asarray(getattr(S, "values", S), dtype=np.float64)
    reconstruction = np.asarray(reconstruction, dtype=np.float64)
    if S.shape != reconstruction.shape:
        raise InputError(f"shape mismatch: {S.shape} vs {reconstruction.shape}")
    diff = S - reconstruction
    return float(np.sum(diff * diff))


def nmf_train(S, k: int, iters: int = 500, seed: int = 0, init=None):
    """Lee-Seung multiplicative-update NMF for the squared Frobenius loss.

    Per iteration: ``H <- H * (W^T S) / (W^T W H + delta)`` followed by
    ``W <- W * (S H^T) / (W H H^T + delta)``. Unless ``init=(W, H)`` is given,
    factors start as U(0, 1) scaled by ``sqrt(mean(S) / k)``.

    Returns:
        ``(NmfModel, TrainTrace)``; the trace holds the loss after every iteration.
    """
    S = np.asarray(getattr(S, "values", S), dtype=np.float64)
    if S.ndim != 2:
        raise InputError(f"S must be a matrix, got shape {S.shape}")
    if np.any(S < 0):
        raise InputError("NMF needs a non-negative target")
    if not np.any(S > 0):
        raise InputError("target matrix is all zero")
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    n, m = S.shape

    if init is None:
        rng = np.random.default_rng(seed)
        scale = np.sqrt(S.mean() / k)
        W = rng.uniform(0.0, 1.0, size=(n, k)) * scale
        H = rng.uniform(0.0, 1.0, size=(k, m)) * scale
    else:
        W, H = (np.array(x, dtype=np.float64) for x in init)
        if W.shape != (n, k) or H.shape != (k, m) or np.any(W < 0) or np.any(H < 0):
            raise InputError("init factors have wrong shape or negative entries")

    trace = TrainTrace()
    start = time.perf_counter()
    for it in range(1, iters + 1):
        H *= (W.T @ S) / (W.T @ W @ H + NMF_DELTA)
        W *= (S @ H.T) / (W @ (H @ H.T) + NMF_DELTA)
        value = common_loss(S, W @ H)
        if not np.isfinite(value):
            raise NumericError(f"NMF loss is not finite at iteration {it}")
        trace.losses.append((it, value))
    trace.wall_time = time.perf_counter() - start
    trace.final_loss = common_loss(S, W @ H)
    return NmfModel(W, H), trace


def svd_truncate(S, k: int) -> SvdModel:
    """Best rank-k factors of S.

    A symmetric S goes through ``numpy.linalg.eigh``: eigenpairs are ranked by
    |lambda|, singular values are |lambda| and the right vectors carry the sign
    of lambda. Other matrices use a dense ``numpy.linalg.svd``.
    """
    S = np.asarray(getattr(S, "values", S), dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError(f"S must be square, got shape {S.shape}")
    n = S.shape[0]
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    try:
        if np.array_equal(S, S.T):
            lam, vecs = np.linalg.eigh(S)
            order = np.argsort(-np.abs(lam), kind="stable")[:k]
            lam, U = lam[order], vecs[:, order]
            sigma = np.abs(lam)
            V = U * np.where(lam < 0, -1.0, 1.0)
        else:
            u, s, vt = np.linalg.svd(S)
            U, sigma, V = u[:, :k], s[:k], vt[:k].T
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    return SvdModel(U, sigma, V)
