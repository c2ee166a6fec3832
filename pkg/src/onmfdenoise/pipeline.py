"""End-to-end denoising: train, sparse-code, mask, and resynthesize.

Signal and noise dictionaries are learned from prior recordings, the
noisy spectrogram is coded against their concatenation, the two partial
reconstructions are turned into a ratio mask that restores exact
additivity, and the masked signal magnitudes are inverted with the noisy
recording's phases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio_io import AudioBuffer
from .errors import DimensionMismatchError, EmptyInputError
from .nmf import Dictionary, NmfConfig, fit_nmf
from .onmf import SamplerConfig, fit_onmf, sparse_code
from .stft import Spectrogram, StftParams, rebuild_with_phases, stft

__all__ = [
    "DenoiseConfig",
    "SeparationResult",
    "train_dictionaries",
    "concat_dictionaries",
    "separate",
    "apply_mask",
    "denoise",
]


@dataclass(frozen=True)
class DenoiseConfig:
    trainer: str = "batch"  # "batch" or "online"
    k_signal: int = 50
    k_noise: int = 10
    train_alpha: float = 0.0
    code_alpha: float = 100.0
    stft: StftParams = field(default_factory=StftParams)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    mask_epsilon: float = 1e-12
    seed: int = 0
    max_iters: int = 500
    rel_tol: float = 1e-4

    def __post_init__(self):
        if self.trainer not in ("batch", "online"):
            raise ValueError(f"unknown trainer {self.trainer!r}")
        if self.k_signal < 1 or self.k_noise < 1:
            raise ValueError("dictionary sizes must be >= 1")


@dataclass(frozen=True)
class SeparationResult:
    s_est: np.ndarray
    n_est: np.ndarray
    s_masked: np.ndarray
    n_masked: np.ndarray
    h_signal: np.ndarray
    h_noise: np.ndarray
    denoised: AudioBuffer | None


def _fit_one(mags: np.ndarray, k: int, cfg: DenoiseConfig, seed: int) -> Dictionary:
    if mags.size == 0:
        raise EmptyInputError("prior spectrogram is empty")
    if cfg.trainer == "batch":
        nmf_cfg = NmfConfig(
            k=k,
            alpha=cfg.train_alpha,
            max_iters=cfg.max_iters,
            rel_tol=cfg.rel_tol,
            seed=seed,
        )
        W, _, _ = fit_nmf(mags, nmf_cfg)
        return W
    sampler = SamplerConfig(
        mode=cfg.sampler.mode,
        batch_cols=min(cfg.sampler.batch_cols, mags.shape[1]),
        steps=cfg.sampler.steps,
        seed=seed,
    )
    return fit_onmf(mags, k, cfg.train_alpha, sampler)


def train_dictionaries(
    s_prime: Spectrogram, n_prime: Spectrogram, cfg: DenoiseConfig
) -> tuple[Dictionary, Dictionary]:
    """Learn the signal dictionary from S' and the noise dictionary from N'."""
    w_signal = _fit_one(s_prime.magnitudes, cfg.k_signal, cfg, cfg.seed)
    w_noise = _fit_one(n_prime.magnitudes, cfg.k_noise, cfg, cfg.seed + 1)
    return w_signal, w_noise


def concat_dictionaries(w_signal: Dictionary, w_noise: Dictionary) -> Dictionary:
    """Stack atoms side by side, signal columns first; column order is the
    contract used to split codes afterwards."""
    if w_signal.k == 0:
        return w_noise
    if w_noise.k == 0:
        return w_signal
    if w_signal.d != w_noise.d:
        raise DimensionMismatchError(
            f"row counts differ: {w_signal.d} vs {w_noise.d}"
        )
    return Dictionary(np.hstack([w_signal.atoms, w_noise.atoms]))


def separate(
    X: Spectrogram,
    w_signal: Dictionary,
    w_noise: Dictionary,
    code_alpha: float,
) -> SeparationResult:
    """Sparse-code X against the concatenated dictionary and split.

    The dictionary is frozen here; only the code matrix is optimized.
    No mask is applied yet (s_masked/n_masked are left equal to the raw
    estimates until apply_mask).
    """
    W = concat_dictionaries(w_signal, w_noise)
    H = sparse_code(X.magnitudes, W.atoms, code_alpha)
    h_signal = H[: w_signal.k, :]
    h_noise = H[w_signal.k :, :]
    s_est = w_signal.atoms @ h_signal
    n_est = w_noise.atoms @ h_noise
    return SeparationResult(
        s_est=s_est,
        n_est=n_est,
        s_masked=s_est,
        n_masked=n_est,
        h_signal=h_signal,
        h_noise=h_noise,
        denoised=None,
    )


def apply_mask(
    X: np.ndarray,
    s_est: np.ndarray,
    n_est: np.ndarray,
    mask_epsilon: float = 1e-12,
) -> tuple[np.ndarray, np.ndarray]:
    """Ratio-mask the mixture magnitudes so the parts add back to X.

    s = S*X/(S+N) and n = N*X/(S+N); cells where S+N < mask_epsilon get
    a 50/50 split of X, which keeps additivity exact everywhere.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape != s_est.shape or X.shape != n_est.shape:
        raise DimensionMismatchError("mask operands do not conform")
    denom = s_est + n_est
    ok = denom >= mask_epsilon
    ratio = np.where(ok, s_est / np.where(ok, denom, 1.0), 0.5)
    s_masked = ratio * X
    n_masked = X - s_masked
    return s_masked, n_masked


def denoise(
    x: AudioBuffer,
    w_signal: Dictionary,
    w_noise: Dictionary,
    cfg: DenoiseConfig,
) -> SeparationResult:
    """Full pipeline on a noisy buffer; returns all intermediates."""
    X = stft(x, cfg.stft)
    raw = separate(X, w_signal, w_noise, cfg.code_alpha)
    s_masked, n_masked = apply_mask(
        X.magnitudes, raw.s_est, raw.n_est, cfg.mask_epsilon
    )
    audio = rebuild_with_phases(s_masked, X)
    samples = audio.samples[: len(x)]
    return SeparationResult(
        s_est=raw.s_est,
        n_est=raw.n_est,
        s_masked=s_masked,
        n_masked=n_masked,
        h_signal=raw.h_signal,
        h_noise=raw.h_noise,
        denoised=AudioBuffer(samples, x.sample_rate_hz),
    )


def render_noise(result: SeparationResult, X: Spectrogram, length: int) -> AudioBuffer:
    """Resynthesize the masked noise part with the mixture's phases."""
    audio = rebuild_with_phases(result.n_masked, X)
    return AudioBuffer(audio.samples[:length], X.sample_rate_hz)
