"""Audio denoising with batch and online non-negative spectrogram factorization."""

from .audio_io import AudioBuffer, SynthConfig, read_wav, synth_mixture, write_wav
from .metrics import EvalReport, decompose, evaluate
from .nmf import (
    Dictionary,
    NmfConfig,
    fit_nmf,
    load_dictionary,
    loss,
    save_dictionary,
    update_code,
    update_dictionary,
)
from .onmf import (
    OnmfState,
    SamplerConfig,
    aggregate,
    batch_objective_oracle,
    fit_onmf,
    sample_batch,
    sparse_code,
    update_dictionary_online,
)
from .pipeline import (
    DenoiseConfig,
    SeparationResult,
    apply_mask,
    concat_dictionaries,
    denoise,
    separate,
    train_dictionaries,
)
from .stft import Spectrogram, StftParams, istft, rebuild_with_phases, stft

__version__ = "0.1.0"
