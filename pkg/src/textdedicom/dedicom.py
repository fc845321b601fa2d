"""Row-stochastic DEDICOM: S ~ A' R A'^T with A' a row softmax of column z-scores.

The loading matrix is trained through an unconstrained parameter ``A_raw``.
Each column of ``A_raw`` is z-normalized (population statistics) and every row of
the result is pushed through a softmax, which gives a row-stochastic ``A'``.
The loss is the squared Frobenius distance between S and ``A' R A'^T``.
Gradients are derived in closed form and back-propagated through both the
softmax and the column statistics.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from textdedicom.errors import InputError, NumericError

log = logging.getLogger(__name__)

DEAD_COLUMN_STD = 1e-12


@dataclass
class DedicomModel:
    A_raw: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        n, k = self.A_raw.shape
        if self.R.shape != (k, k):
            raise InputError(f"R must be {k}x{k}, got {self.R.shape}")

    @property
    def n(self) -> int:
        return self.A_raw.shape[0]

    @property
    def k(self) -> int:
        return self.A_raw.shape[1]

    @property
    def num_parameters(self) -> int:
        return self.n * self.k + self.k * self.k

    def row_stochastic(self) -> "RowStochasticA":
        return row_softmax_znorm(self.A_raw)


@dataclass(frozen=True)
class RowStochasticA:
    A_prime: np.ndarray
    col_means: np.ndarray
    col_stds: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    k: int = 6
    lr_A: float = 0.001
    lr_R: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    num_epochs: int = 15000
    seed: int = 0
    loss_log_stride: int = 1
    # False: grad_R is taken after A has been updated within the epoch
    simultaneous: bool = False
    # relative improvement threshold over 100 epochs; None disables early stopping
    early_stop_tol: float | None = None

    def __post_init__(self):
        if self.k < 1:
            raise InputError(f"k must be >= 1, got {self.k}")
        if self.lr_A <= 0 or self.lr_R <= 0:
            raise InputError("learning rates must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise InputError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")
        if self.num_epochs < 1:
            raise InputError(f"num_epochs must be >= 1, got {self.num_epochs}")
        if self.loss_log_stride < 1:
            raise InputError("loss_log_stride must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainTrace:
    losses: list = field(default_factory=list)  # (epoch, loss)
    wall_time: float = 0.0
    final_loss: float = float("nan")

    def to_csv(self) -> str:
        lines = ["epoch,loss"]
        lines += [f"{epoch},{value!r}" for epoch, value in self.losses]
        return "\n".join(lines) + "\n"

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def load_csv(cls, path) -> "TrainTrace":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "epoch,loss":
                raise InputError(f"{path}: unexpected trace header {header!r}")
            losses = []
            for line in fh:
                if line.strip():
                    epoch, value = line.split(",")
                    losses.append((int(epoch), float(value)))
        final = losses[-1][1] if losses else float("nan")
        return cls(losses, 0.0, final)


def _target(S) -> np.ndarray:
    return np.asarray(getattr(S, "values", S), dtype=np.float64)


def _znorm(A_raw: np.ndarray):
    mu = A_raw.mean(axis=0)
    centered = A_raw - mu
    sigma = np.sqrt((centered * centered).mean(axis=0))
    live = sigma >= DEAD_COLUMN_STD
    Z = np.zeros_like(A_raw)
    Z[:, live] = centered[:, live] / sigma[live]
    return Z, mu, sigma, live


def _softmax_rows(Z: np.ndarray) -> np.ndarray:
    e = np.exp(Z - Z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def row_softmax_znorm(A_raw) -> RowStochasticA:
    """Column-wise z-normalize ``A_raw`` and apply a softmax to every row.

    Population mean/std (divide by n). A column with std below 1e-12 gets
    z-scores of exactly 0.
    """
    A_raw = np.asarray(A_raw, dtype=np.float64)
    if A_raw.ndim != 2 or A_raw.shape[0] < 2:
        raise InputError(f"A_raw must be n x k with n >= 2, got shape {A_raw.shape}")
    Z, mu, sigma, _ = _znorm(A_raw)
    return RowStochasticA(_softmax_rows(Z), mu, sigma)


def reconstruct(A_prime, R) -> np.ndarray:
    A_prime = np.asarray(getattr(A_prime, "A_prime", A_prime), dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if A_prime.ndim != 2 or R.shape != (A_prime.shape[1], A_prime.shape[1]):
        raise InputError(f"shape mismatch: A' {A_prime.shape}, R {R.shape}")
    return (A_prime @ R) @ A_prime.T


def _check_target(S: np.ndarray, model: DedicomModel) -> None:
    if S.shape != (model.n, model.n):
        raise InputError(f"target is {S.shape}, model expects {model.n}x{model.n}")


def loss(S, model: DedicomModel) -> float:
    """Squared Frobenius norm of ``S - A' R A'^T``."""
    S = _target(S)
    _check_target(S, model)
    diff = reconstruct(row_softmax_znorm(model.A_raw).A_prime, model.R) - S
    value = float(np.sum(diff * diff))
    if not np.isfinite(value):
        raise NumericError("loss is not finite")
    return value


def _grad_R(S: np.ndarray, A_prime: np.ndarray, R: np.ndarray) -> np.ndarray:
    D = reconstruct(A_prime, R) - S
    return 2.0 * (A_prime.T @ D @ A_prime)


def _grad_A(S: np.ndarray, A_raw: np.ndarray, R: np.ndarray):
    """Gradient w.r.t. ``A_raw`` and the loss at ``A_raw``."""
    Z, _, sigma, live = _znorm(A_raw)
    P = _softmax_rows(Z)
    D = reconstruct(P, R) - S
    value = float(np.sum(D * D))
    # dL/dA' for L = ||A' R A'^T - S||^2
    G = 2.0 * (D @ P @ R.T + D.T @ P @ R)
    # row softmax backward
    dZ = P * (G - np.sum(G * P, axis=1, keepdims=True))
    # z-score backward with population statistics; dead columns have constant Z
    dA = np.zeros_like(A_raw)
    dZl, Zl = dZ[:, live], Z[:, live]
    dA[:, live] = (dZl - dZl.mean(axis=0) - Zl * (dZl * Zl).mean(axis=0)) / sigma[live]
    return dA, value


def gradients(S, model: DedicomModel):
    """Exact gradients of the loss with respect to ``A_raw`` and ``R``."""
    S = _target(S)
    _check_target(S, model)
    grad_A, _ = _grad_A(S, model.A_raw, model.R)
    grad_R = _grad_R(S, row_softmax_znorm(model.A_raw).A_prime, model.R)
    if not (np.all(np.isfinite(grad_A)) and np.all(np.isfinite(grad_R))):
        raise NumericError("gradient is not finite")
    return grad_A, grad_R


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, param) -> "AdamState":
        return cls(np.zeros_like(param), np.zeros_like(param), 0)


def adam_step(param, grad, state: AdamState, lr: float, beta1=0.9, beta2=0.999, epsilon=1e-8):
    """One bias-corrected Adam update; returns the new parameter and state."""
    if param.shape != grad.shape:
        raise InputError(f"param {param.shape} and grad {grad.shape} differ")
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    return param - lr * m_hat / (np.sqrt(v_hat) + epsilon), AdamState(m, v, t)


def element_mean(S) -> float:
    S = _target(S)
    return float(S.sum() / S.size)


def init_model(n: int, k: int, seed: int, s_bar: float) -> DedicomModel:
    """Draw A_raw and R i.i.d. from U(0, 2) and scale both by ``s_bar``.

    Scaling A_raw is irrelevant for A' (z-scores ignore positive affine maps) but
    is kept so the initial state matches the published procedure exactly.
    """
    if s_bar <= 0 or not np.isfinite(s_bar):
        raise InputError(f"s_bar must be positive, got {s_bar}")
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    A_raw = rng.uniform(0.0, 2.0, size=(n, k)) * s_bar
    R = rng.uniform(0.0, 2.0, size=(k, k)) * s_bar
    return DedicomModel(A_raw, R)


def train(S, config: TrainConfig, model: DedicomModel | None = None, callback=None):
    """Fit row-stochastic DEDICOM to ``S`` with alternating Adam updates.

    Each epoch records the current loss, updates ``A_raw`` with its gradient,
    then updates ``R``. By default ``grad_R`` is evaluated at the freshly
    updated ``A_raw``; ``config.simultaneous`` uses the epoch-start ``A_raw``
    for both.

    Args:
        S: Target matrix (``PpmiMatrix`` or square array), non-negative.
        config: Hyperparameters.
        model: Optional starting point; defaults to :func:`init_model`.
        callback: Called as ``callback(epoch, model)`` after every epoch.

    Returns:
        ``(model, row_stochastic_A, trace)``.
    """
    S = _target(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InputError(f"target must be square, got shape {S.shape}")
    if np.any(S < 0):
        raise InputError("target matrix must be non-negative")
    n = S.shape[0]
    if not 2 <= config.k <= n:
        raise InputError(f"need 2 <= k <= n, got k={config.k}, n={n}")
    s_bar = element_mean(S)
    if s_bar == 0:
        raise InputError("target matrix is all zero")
    if model is None:
        model = init_model(n, config.k, config.seed, s_bar)

    A_raw, R = model.A_raw.copy(), model.R.copy()
    state_A = AdamState.zeros_like(A_raw)
    state_R = AdamState.zeros_like(R)
    trace = TrainTrace()
    history = []
    start = time.perf_counter()

    for epoch in range(1, config.num_epochs + 1):
        grad_A, value = _grad_A(S, A_raw, R)
        if not np.isfinite(value) or not np.all(np.isfinite(grad_A)):
            raise NumericError(f"non-finite loss or gradient at epoch {epoch}")
        if epoch % config.loss_log_stride == 0 or epoch == 1:
            trace.losses.append((epoch, value))

        A_prime_old = _softmax_rows(_znorm(A_raw)[0]) if config.simultaneous else None
        A_raw, state_A = adam_step(A_raw, grad_A, state_A, config.lr_A,
                                   config.beta1, config.beta2, config.epsilon)
        A_prime = A_prime_old if config.simultaneous else _softmax_rows(_znorm(A_raw)[0])
        grad_R = _grad_R(S, A_prime, R)
        R, state_R = adam_step(R, grad_R, state_R, config.lr_R,
                               config.beta1, config.beta2, config.epsilon)

        if callback is not None:
            callback(epoch, DedicomModel(A_raw, R))

        if config.early_stop_tol is not None:
            history.append(value)
            if len(history) > 100:
                old = history[-101]
                if old > 0 and (old - value) / old < config.early_stop_tol:
                    log.info("early stop at epoch %d (loss %.6g)", epoch, value)
                    if trace.losses[-1][0] != epoch:
                        trace.losses.append((epoch, value))
                    break

    model = DedicomModel(A_raw, R)
    trace.final_loss = loss(S, model)
    trace.wall_time = time.perf_counter() - start
    log.info("trained %d epochs in %.2fs, final loss %.6g", epoch, trace.wall_time, trace.final_loss)
    return model, row_softmax_znorm(A_raw), trace
