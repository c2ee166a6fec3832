"""Short-time Fourier transform, its overlap-add inverse, and exporters.

Frame f covers samples [f*hop, f*hop + window_len); the tail is
zero-padded so every input sample is covered. Only non-negative
frequency bins are kept (d = fft_len/2 + 1). Reconstruction uses
overlap-add with window-square normalization, which is exact in the
interior for Hann windows at 50% or 75% overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer
from .errors import BufferTooShortError, DimensionMismatchError, InvalidParamsError

__all__ = [
    "StftParams",
    "Spectrogram",
    "stft",
    "istft",
    "rebuild_with_phases",
    "export_pgm",
    "export_csv",
]


@dataclass(frozen=True)
class StftParams:
    window_len: int = 1024
    hop: int = 512
    fft_len: int = 1024
    window_kind: str = "hann"

    def __post_init__(self):
        if self.window_len <= 0 or self.hop <= 0:
            raise InvalidParamsError("window_len and hop must be positive")
        if self.hop > self.window_len:
            raise InvalidParamsError("hop must not exceed window_len")
        if self.fft_len < self.window_len:
            raise InvalidParamsError("fft_len must be >= window_len")
        if self.fft_len & (self.fft_len - 1):
            raise InvalidParamsError("fft_len must be a power of two")
        if self.window_kind != "hann":
            raise InvalidParamsError(f"unknown window {self.window_kind!r}")

    @property
    def n_bins(self) -> int:
        return self.fft_len // 2 + 1

    def window(self) -> np.ndarray:
        # periodic Hann: exact constant overlap-add at hop = N/2 or N/4
        n = np.arange(self.window_len)
        return 0.5 - 0.5 * np.cos(2 * np.pi * n / self.window_len)


@dataclass(frozen=True)
class Spectrogram:
    """Magnitudes and phases of an STFT, bins x frames."""

    magnitudes: np.ndarray  # (d, n), >= 0
    phases: np.ndarray  # (d, n), in (-pi, pi]
    params: StftParams
    sample_rate_hz: int

    def __post_init__(self):
        if self.magnitudes.shape != self.phases.shape:
            raise DimensionMismatchError("magnitudes and phases shapes differ")

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[1]


def _frame(samples: np.ndarray, params: StftParams) -> np.ndarray:
    """Slice a signal into overlapping frames, zero-padding the tail."""
    win_len, hop = params.window_len, params.hop
    n = samples.shape[0]
    n_frames = 1 + int(np.ceil(max(0, n - win_len) / hop))
    padded = np.zeros((n_frames - 1) * hop + win_len)
    padded[:n] = samples
    idx = np.arange(win_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return padded[idx]


def stft(buf: AudioBuffer, params: StftParams | None = None) -> Spectrogram:
    """Forward transform of a mono buffer to magnitudes and phases."""
    params = params or StftParams()
    if len(buf) < params.window_len:
        raise BufferTooShortError(
            f"buffer has {len(buf)} samples, window needs {params.window_len}"
        )
    frames = _frame(buf.samples, params) * params.window()[None, :]
    spec = np.fft.rfft(frames, n=params.fft_len, axis=1).T  # (d, n_frames)
    mags = np.abs(spec)
    assert np.all(mags >= 0)
    return Spectrogram(
        magnitudes=mags,
        phases=np.angle(spec),
        params=params,
        sample_rate_hz=buf.sample_rate_hz,
    )


def _check_cola(params: StftParams) -> None:
    if params.hop * 2 != params.window_len and params.hop * 4 != params.window_len:
        raise InvalidParamsError(
            "inverse needs Hann with hop = window_len/2 or window_len/4"
        )


def istft(spec: Spectrogram) -> AudioBuffer:
    """Overlap-add inverse; output length (n_frames-1)*hop + window_len."""
    params = spec.params
    _check_cola(params)
    win_len, hop = params.window_len, params.hop
    window = params.window()
    frames = np.fft.irfft(
        (spec.magnitudes * np.exp(1j * spec.phases)).T, n=params.fft_len, axis=1
    )[:, :win_len]
    n_frames = frames.shape[0]
    out_len = (n_frames - 1) * hop + win_len
    out = np.zeros(out_len)
    wsum = np.zeros(out_len)
    wsq = window**2
    for f in range(n_frames):
        start = f * hop
        out[start : start + win_len] += frames[f] * window
        wsum[start : start + win_len] += wsq
    # floor the normalizer: at the very edges the window-power sum decays
    # to zero and dividing by it would blow up frames whose magnitudes
    # were modified; flooring tapers those few samples instead
    out /= np.maximum(wsum, 1e-2)
    return AudioBuffer(out, spec.sample_rate_hz)


def rebuild_with_phases(mags: np.ndarray, reference: Spectrogram) -> AudioBuffer:
    """Inverse transform of given magnitudes with the reference's phases."""
    mags = np.asarray(mags, dtype=np.float64)
    if mags.shape != reference.magnitudes.shape:
        raise DimensionMismatchError(
            f"magnitudes shape {mags.shape} != reference {reference.magnitudes.shape}"
        )
    return istft(
        Spectrogram(
            magnitudes=mags,
            phases=reference.phases,
            params=reference.params,
            sample_rate_hz=reference.sample_rate_hz,
        )
    )


def export_pgm(magnitudes: np.ndarray, path, floor_db: float = -80.0) -> None:
    """Write magnitudes as an 8-bit P5 PGM, log-scaled relative to the max."""
    mags = np.asarray(magnitudes, dtype=np.float64)
    peak = mags.max()
    if peak <= 0:
        db = np.full_like(mags, floor_db)
    else:
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mags / peak)
        db = np.maximum(db, floor_db)
    pix = np.rint((db - floor_db) / (-floor_db) * 255.0).astype(np.uint8)
    d, n = pix.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{n} {d}\n255\n".encode("ascii"))
        fh.write(pix.tobytes())


def export_csv(magnitudes: np.ndarray, path) -> None:
    """Write magnitudes as CSV, one row per frequency bin."""
    np.savetxt(path, np.asarray(magnitudes), delimiter=",", fmt="%.12g")
