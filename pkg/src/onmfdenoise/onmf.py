"""Online NMF: batched sparse coding with aggregated dictionary updates.

Each step samples a column batch, sparse-codes it against the current
dictionary, folds the batch into two running aggregation matrices
A (k x k) and B (k x d), and refits the dictionary from those aggregates
alone. Column history is never stored, so memory stays at
O(d*m + d*k + k^2) regardless of the spectrogram width.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BatchTooWideError,
    DegenerateStateError,
    DimensionMismatchError,
    EmptyInputError,
)
from .nmf import Dictionary

__all__ = [
    "SamplerConfig",
    "OnmfState",
    "sample_batch",
    "sparse_code",
    "aggregate",
    "update_dictionary_online",
    "fit_onmf",
    "batch_objective_oracle",
]


@dataclass(frozen=True)
class SamplerConfig:
    mode: str = "uniform"  # "uniform" or "consecutive"
    batch_cols: int = 100
    steps: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("uniform", "consecutive"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.batch_cols < 1 or self.steps < 0:
            raise ValueError("batch_cols must be >= 1 and steps >= 0")


@dataclass(frozen=True)
class OnmfState:
    """Dictionary plus aggregation matrices after t steps."""

    W: np.ndarray  # (d, k)
    A: np.ndarray  # (k, k)
    B: np.ndarray  # (k, d)
    t: int


def _n_cols(X) -> int:
    return X.shape[1]


def _take_columns(X, idx: np.ndarray) -> np.ndarray:
    """Column access point; sources may supply their own take_columns."""
    take = getattr(X, "take_columns", None)
    if take is not None:
        return np.asarray(take(idx), dtype=np.float64)
    return np.asarray(X, dtype=np.float64)[:, idx]


def sample_batch(X, cfg: SamplerConfig, t: int) -> np.ndarray:
    """Batch of cfg.batch_cols columns for step t (1-based).

    "uniform": i.i.d. columns with replacement, seeded by (cfg.seed, t).
    "consecutive": the cyclic window starting at (t-1)*m mod n; only that
    window is ever touched, which keeps the streaming contract.
    """
    n = _n_cols(X)
    m = cfg.batch_cols
    if m > n:
        raise BatchTooWideError(f"batch of {m} columns from a {n}-column matrix")
    if cfg.mode == "uniform":
        rng = np.random.default_rng([cfg.seed, t])
        idx = rng.integers(0, n, size=m)
    else:
        start = ((t - 1) * m) % n
        idx = (start + np.arange(m)) % n
    return _take_columns(X, idx)


def sparse_code(
    X_t: np.ndarray,
    W: np.ndarray,
    alpha: float,
    rel_tol: float = 1e-5,
    max_iters: int = 200,
) -> np.ndarray:
    """Non-negative L1-regularized least-squares code for a fixed dictionary.

    Multiplicative H-updates with the alpha-augmented denominator; the
    Gram matrix and cross products are computed once since W is fixed.
    Stops when the relative change of H drops below rel_tol.
    """
    X_t = np.asarray(X_t, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if W.shape[0] != X_t.shape[0]:
        raise DimensionMismatchError(f"W rows {W.shape[0]} != X rows {X_t.shape[0]}")
    k, m = W.shape[1], X_t.shape[1]
    gram = W.T @ W
    P = W.T @ X_t
    H = np.ones((k, m))
    eps = 1e-12
    for _ in range(max_iters):
        H_new = H * P / (gram @ H + alpha + eps)
        delta = np.linalg.norm(H_new - H)
        scale = np.linalg.norm(H) + eps
        H = H_new
        if delta / scale < rel_tol:
            break
    return H


def aggregate(state: OnmfState, H_t: np.ndarray, X_t: np.ndarray) -> OnmfState:
    """Fold step t's batch into the running averages A and B."""
    if H_t.shape[1] != X_t.shape[1] or H_t.shape[0] != state.A.shape[0]:
        raise DimensionMismatchError(
            f"H{H_t.shape} does not conform with X{X_t.shape} / A{state.A.shape}"
        )
    t = state.t + 1
    A = ((t - 1) * state.A + H_t @ H_t.T) / t
    B = ((t - 1) * state.B + H_t @ X_t.T) / t
    return replace(state, A=A, B=B, t=t)


def update_dictionary_online(
    state: OnmfState,
    sweeps: int = 1,
    normalize: bool = True,
    epsilon: float = 1e-12,
) -> np.ndarray:
    """Refit the dictionary from the aggregates A and B.

    Cyclic column-wise coordinate descent on the quadratic surrogate
    0.5*Tr(W A W^T) - Tr(B W) with a non-negativity projection:
    w_j <- max(0, w_j + (b_j - W a_j) / (A_jj + eps)). With
    ``normalize`` each column is rescaled to unit L2 after its update;
    columns that project to zero keep their previous direction.
    """
    if state.t < 1 or not np.any(state.A):
        raise DegenerateStateError("no aggregated information yet")
    A, B = state.A, state.B
    W = state.W.copy()
    k = W.shape[1]
    for _ in range(sweeps):
        for j in range(k):
            w = np.maximum(0.0, W[:, j] + (B[j, :] - W @ A[:, j]) / (A[j, j] + epsilon))
            if normalize:
                norm = np.linalg.norm(w)
                if norm < 1e-12:
                    continue  # keep previous unit-norm column
                w = w / norm
            W[:, j] = w
    return W


def surrogate_value(W: np.ndarray, A: np.ndarray, B: np.ndarray) -> float:
    """0.5*Tr(W A W^T) - Tr(B W); the objective coordinate descent drives."""
    return 0.5 * float(np.trace(W @ A @ W.T)) - float(np.trace(B @ W))


def batch_objective_oracle(X_batches, H_list, W: np.ndarray) -> float:
    """Average data-term loss over stored batches with codes held fixed.

    (1/t) * sum_s 0.5 * ||X_s - W H_s||_F^2. Test oracle: up to a
    constant in the X_s, this equals the aggregated surrogate.
    """
    if len(X_batches) != len(H_list):
        raise DimensionMismatchError("batch and code lists differ in length")
    if not X_batches:
        raise EmptyInputError("no batches")
    total = 0.0
    for X_s, H_s in zip(X_batches, H_list):
        resid = X_s - W @ H_s
        total += 0.5 * float(np.sum(resid * resid))
    return total / len(X_batches)


def _aux_elements(d: int, k: int, m: int) -> int:
    """Elements of per-step working storage: batch, codes, aggregates, Gram."""
    return d * m + k * m + k * k + k * d + d * k + k * k + k * m


def fit_onmf(
    X,
    k: int,
    alpha: float,
    sampler: SamplerConfig,
    log_path=None,
) -> Dictionary:
    """Run the online factorization for sampler.steps steps.

    The initial dictionary is i.i.d. uniform [0, 1) with unit-normalized
    columns, seeded by sampler.seed. An optional JSON-lines log records
    per-step surrogate value, code sparsity, and working-set size.
    """
    d, n = X.shape
    if n == 0 or d == 0:
        raise EmptyInputError("cannot factorize an empty matrix")
    rng = np.random.default_rng(sampler.seed)
    W = rng.random((d, k))
    W /= np.linalg.norm(W, axis=0)[None, :]
    state = OnmfState(W=W, A=np.zeros((k, k)), B=np.zeros((k, d)), t=0)
    log_fh = open(log_path, "w") if log_path is not None else None
    try:
        for t in range(1, sampler.steps + 1):
            X_t = sample_batch(X, sampler, t)
            H_t = sparse_code(X_t, state.W, alpha)
            state = aggregate(state, H_t, X_t)
            W_new = update_dictionary_online(state)
            state = replace(state, W=W_new)
            if log_fh is not None:
                record = {
                    "step": t,
                    "surrogate": surrogate_value(state.W, state.A, state.B),
                    "code_sparsity": float(np.mean(H_t <= 1e-10)),
                    "aux_elements": _aux_elements(d, k, sampler.batch_cols),
                }
                log_fh.write(json.dumps(record) + "\n")
    finally:
        if log_fh is not None:
            log_fh.close()
    return Dictionary(state.W)
