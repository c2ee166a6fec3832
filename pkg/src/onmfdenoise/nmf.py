"""Batch non-negative matrix factorization by multiplicative updates.

Minimizes 0.5 * ||X - WH||_F^2 + alpha * ||H||_1 over W, H >= 0, with the
regularizer folded into the code-update denominator. After each full
iteration, dictionary columns are rescaled to unit L2 norm with the
matching code rows scaled inversely, so the product WH is unchanged.
fit_nmf uses a normalization-aware dictionary step so the rescale never
pushes the regularized loss up; the plain multiplicative dictionary
update is kept as a standalone operation.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyInputError, UnsupportedFormatError

__all__ = [
    "Dictionary",
    "NmfConfig",
    "loss",
    "update_code",
    "update_dictionary",
    "renormalize_pair",
    "fit_nmf",
    "save_dictionary",
    "load_dictionary",
]

_MAGIC = b"ONMFDICT"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Dictionary:
    """Non-negative d x k atom matrix with unit-L2 columns."""

    atoms: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "atoms", np.asarray(self.atoms, dtype=np.float64))
        if self.atoms.ndim != 2:
            raise DimensionMismatchError("atoms must be a 2-D matrix")

    @property
    def d(self) -> int:
        return self.atoms.shape[0]

    @property
    def k(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class NmfConfig:
    k: int
    alpha: float = 0.0
    max_iters: int = 500
    rel_tol: float = 1e-4
    seed: int = 0
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.k < 1:
            raise EmptyInputError("k must be >= 1")
        if self.rel_tol <= 0 or self.epsilon <= 0:
            raise ValueError("rel_tol and epsilon must be positive")


def _conform(X, W, H):
    if W.shape[0] != X.shape[0] or H.shape[1] != X.shape[1] or W.shape[1] != H.shape[0]:
        raise DimensionMismatchError(
            f"shapes do not conform: X{X.shape}, W{W.shape}, H{H.shape}"
        )


def loss(X: np.ndarray, W: np.ndarray, H: np.ndarray, alpha: float) -> float:
    """0.5 * ||X - WH||_F^2 + alpha * sum(H)."""
    _conform(X, W, H)
    resid = X - W @ H
    return 0.5 * float(np.sum(resid * resid)) + alpha * float(np.sum(H))


def update_code(X, W, H, alpha: float = 0.0, epsilon: float = 1e-12) -> np.ndarray:
    """One multiplicative step on H; alpha enters the denominator."""
    _conform(X, W, H)
    numer = W.T @ X
    denom = W.T @ W @ H + alpha + epsilon
    return H * numer / denom


def update_dictionary(X, W, H, epsilon: float = 1e-12) -> np.ndarray:
    """One multiplicative step on W (no regularization)."""
    _conform(X, W, H)
    numer = X @ H.T
    denom = W @ (H @ H.T) + epsilon
    return W * numer / denom


def _update_dictionary_normalized(X, W, H, epsilon: float = 1e-12) -> np.ndarray:
    """Multiplicative W step that respects the unit-column constraint.

    For unit-norm columns the plain update followed by a rescale can push
    the L1 term of the loss up; the correction terms below keep the full
    regularized loss non-increasing once columns are renormalized.
    """
    _conform(X, W, H)
    XHt = X @ H.T
    WHHt = W @ (H @ H.T)
    numer = XHt + W * np.sum(W * WHHt, axis=0)[None, :]
    denom = WHHt + W * np.sum(W * XHt, axis=0)[None, :] + epsilon
    return W * numer / denom


def renormalize_pair(W, H, rng=None, dead_tol: float = 1e-12):
    """Scale W columns to unit L2 and H rows inversely; WH is preserved.

    Columns with vanishing norm are reinitialized from ``rng`` (their H
    rows zeroed) so atoms cannot die permanently.
    """
    W = W.copy()
    H = H.copy()
    norms = np.linalg.norm(W, axis=0)
    dead = norms < dead_tol
    if np.any(dead):
        if rng is None:
            rng = np.random.default_rng(0)
        W[:, dead] = rng.random((W.shape[0], int(dead.sum())))
        H[dead, :] = 0.0
        norms = np.linalg.norm(W, axis=0)
    W /= norms[None, :]
    H *= norms[:, None]
    return W, H


def fit_nmf(X: np.ndarray, config: NmfConfig):
    """Alternate code/dictionary updates until the loss stalls.

    Returns (Dictionary, H, trace) where trace[0] is the loss of the
    random initialization and trace[i] the loss after iteration i. Stops
    when |L_i - L_{i-1}| / L_0 < rel_tol or max_iters is reached.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        raise EmptyInputError("cannot factorize an empty matrix")
    if np.any(X < 0):
        raise ValueError("X must be non-negative")
    d, n = X.shape
    rng = np.random.default_rng(config.seed)
    W = rng.random((d, config.k))
    H = rng.random((config.k, n))
    # start on the unit-column manifold so every iteration sees unit atoms
    W, H = renormalize_pair(W, H, rng)
    l0 = loss(X, W, H, config.alpha)
    trace = [l0]
    for _ in range(config.max_iters):
        H = update_code(X, W, H, config.alpha, config.epsilon)
        W = _update_dictionary_normalized(X, W, H, config.epsilon)
        W, H = renormalize_pair(W, H, rng)
        trace.append(loss(X, W, H, config.alpha))
        if l0 > 0 and abs(trace[-1] - trace[-2]) / l0 < config.rel_tol:
            break
    return Dictionary(W), H, trace


def save_dictionary(dictionary: Dictionary, path) -> None:
    """Binary format: magic, version u32, d u32, k u32, row-major f64 LE."""
    W = dictionary.atoms
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _FORMAT_VERSION, W.shape[0], W.shape[1]))
        fh.write(W.astype("<f8").tobytes(order="C"))


def load_dictionary(path) -> Dictionary:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise UnsupportedFormatError(f"{path}: bad magic {magic!r}")
        version, d, k = struct.unpack("<III", fh.read(12))
        if version != _FORMAT_VERSION:
            raise UnsupportedFormatError(f"{path}: unknown version {version}")
        data = np.frombuffer(fh.read(8 * d * k), dtype="<f8")
        if data.size != d * k:
            raise UnsupportedFormatError(f"{path}: truncated payload")
    return Dictionary(data.reshape(d, k).copy())


def export_dictionary_csv(dictionary: Dictionary, path) -> None:
    """Debug exporter: one row per frequency bin."""
    np.savetxt(path, dictionary.atoms, delimiter=",", fmt="%.12g")
