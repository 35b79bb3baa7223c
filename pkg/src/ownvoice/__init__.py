"""Own-voice transfer modelling between the outer and in-ear microphones of a hearable.

Identify speech-independent and phoneme-dependent relative transfer
functions from paired recordings, simulate in-ear speech from outer-mic
recordings, and score simulations by log-spectral distance.
"""
from .errors import (
    ConfigError,
    InsufficientFramesError,
    LabelFileError,
    ManifestError,
    MissingFileError,
    ModelFormatError,
    NoDataError,
    OwnVoiceError,
    PairingError,
    TooShortError,
    ValidationError,
    WavFormatError,
)
from .labels import (
    UNLABELED,
    FrameLabels,
    LabelSegment,
    cluster_pseudo_phonemes,
    frames_to_segments,
    load_segments,
    segments_to_frames,
)
from .metrics import LsdResult, lsd
from .rtf import (
    RtfAccumulator,
    RtfModel,
    accumulate,
    finalize_speech_dependent,
    finalize_speech_independent,
    load_model,
    merge,
    save_model,
)
from .simulate import (
    SimulationConfig,
    SimulationResult,
    apply_prediction_delay,
    apply_speech_dependent,
    apply_speech_independent,
    simulate_inear,
)
from .stft import AudioClip, Spectrogram, StftConfig, analyze, sqrt_hann_window, synthesize
from .dataset import Manifest, ManifestEntry, load_manifest, read_wav, write_wav

__version__ = "0.1.0"
