"""Mono WAV reading/writing and synthetic test-signal generation.

All audio inside the package lives in float64 amplitudes in [-1, 1];
the 16-bit PCM writer is the only quantization point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.io import wavfile

from .errors import InvalidConfigError, UnsupportedFormatError

__all__ = [
    "AudioBuffer",
    "SynthConfig",
    "read_wav",
    "write_wav",
    "synth_mixture",
]


@dataclass(frozen=True)
class AudioBuffer:
    """Mono sample sequence plus its sample rate."""

    samples: np.ndarray  # float64, shape (n,)
    sample_rate_hz: int

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))
        if self.sample_rate_hz <= 0:
            raise InvalidConfigError("sample_rate_hz must be positive")

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def rms(self) -> float:
        return float(np.sqrt(np.mean(np.square(self.samples)))) if len(self) else 0.0


# Full-scale divisors per on-disk dtype; 24-bit PCM arrives as int32.
_INT_SCALE = {
    np.dtype(np.uint8): 128.0,
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


def read_wav(path) -> AudioBuffer:
    """Read a PCM WAV file as a mono float64 buffer in [-1, 1].

    Multi-channel files are averaged to mono. Integer samples are scaled
    by their full-scale value; float files are taken as-is.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except ValueError as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    if data.size == 0:
        raise UnsupportedFormatError(f"{path}: empty data chunk")
    if data.dtype in _INT_SCALE:
        x = data.astype(np.float64)
        if data.dtype == np.dtype(np.uint8):
            x -= 128.0
        x /= _INT_SCALE[data.dtype]
    elif data.dtype in (np.dtype(np.float32), np.dtype(np.float64)):
        x = data.astype(np.float64)
    else:
        raise UnsupportedFormatError(f"{path}: unsupported sample dtype {data.dtype}")
    if x.ndim == 2:
        x = x.mean(axis=1)
    return AudioBuffer(samples=x, sample_rate_hz=int(rate))


def write_wav(buf: AudioBuffer, path) -> None:
    """Write a buffer as 16-bit PCM mono, clamping samples to [-1, 1]."""
    if len(buf) == 0:
        raise InvalidConfigError("cannot write an empty buffer")
    q = np.clip(np.rint(buf.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(path, buf.sample_rate_hz, q)


@dataclass(frozen=True)
class SynthConfig:
    """Recipe for a deterministic clean/noise/mixture triple.

    ``chords`` is a sequence of chords played back-to-back, each lasting
    ``segment_s`` seconds (cycled to fill the duration). A chord entry is
    a frequency in Hz, or an (f0, f1) pair for a linear chirp across the
    segment.
    """

    duration_s: float
    sample_rate_hz: int = 16000
    chords: Sequence[Sequence] = field(default_factory=lambda: [[440.0]])
    segment_s: float = 0.5
    amplitude: float = 0.3
    noise_kind: str = "white"  # "white" or "wav"
    noise_wav: AudioBuffer | None = None
    snr_db: float = 5.0
    seed: int = 0


def _render_clean(cfg: SynthConfig) -> np.ndarray:
    sr = cfg.sample_rate_hz
    n_total = int(round(cfg.duration_s * sr))
    seg_len = max(1, int(round(cfg.segment_s * sr)))
    out = np.zeros(n_total)
    pos = 0
    chord_idx = 0
    while pos < n_total:
        length = min(seg_len, n_total - pos)
        t = np.arange(length) / sr
        seg = np.zeros(length)
        for tone in cfg.chords[chord_idx % len(cfg.chords)]:
            if np.isscalar(tone):
                seg += np.sin(2 * np.pi * float(tone) * t)
            else:
                f0, f1 = tone
                # linear chirp: phase integral of f0 + (f1-f0) * t / seg_dur
                dur = length / sr
                seg += np.sin(2 * np.pi * (f0 * t + 0.5 * (f1 - f0) * t * t / dur))
        out[pos : pos + length] = cfg.amplitude * seg
        pos += length
        chord_idx += 1
    return out


def synth_mixture(cfg: SynthConfig) -> tuple[AudioBuffer, AudioBuffer, AudioBuffer]:
    """Build (clean, noise, mixture) with the noise scaled to the target SNR.

    The mixture is exactly clean + noise sample-by-sample; the scaling of
    the noise achieves the requested SNR. Deterministic for a fixed seed.
    """
    if not (cfg.duration_s > 0):
        raise InvalidConfigError("duration must be positive")
    if math.isnan(cfg.snr_db):
        raise InvalidConfigError("SNR is NaN")
    clean = _render_clean(cfg)
    n_total = clean.shape[0]

    if math.isinf(cfg.snr_db) and cfg.snr_db > 0:
        noise = np.zeros(n_total)
    else:
        if cfg.noise_kind == "white":
            rng = np.random.default_rng(cfg.seed)
            noise = rng.standard_normal(n_total)
        elif cfg.noise_kind == "wav":
            if cfg.noise_wav is None or len(cfg.noise_wav) == 0:
                raise InvalidConfigError("noise_kind='wav' requires noise_wav")
            src = cfg.noise_wav.samples
            reps = int(np.ceil(n_total / src.shape[0]))
            noise = np.tile(src, reps)[:n_total].copy()
        else:
            raise InvalidConfigError(f"unknown noise kind {cfg.noise_kind!r}")
        rms_clean = np.sqrt(np.mean(clean**2))
        rms_noise = np.sqrt(np.mean(noise**2))
        if rms_noise == 0:
            raise InvalidConfigError("noise source is silent")
        target_rms = rms_clean / (10.0 ** (cfg.snr_db / 20.0))
        noise *= target_rms / rms_noise

    mixture = clean + noise
    # keep the mixture inside [-1, 1] without breaking additivity
    peak = np.max(np.abs(mixture)) if n_total else 0.0
    if peak > 1.0:
        clean = clean / peak
        noise = noise / peak
        mixture = clean + noise
    sr = cfg.sample_rate_hz
    return (
        AudioBuffer(clean, sr),
        AudioBuffer(noise, sr),
        AudioBuffer(mixture, sr),
    )
