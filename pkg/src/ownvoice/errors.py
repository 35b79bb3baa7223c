"""Exception hierarchy.

Validation problems subclass :class:`ValidationError` (CLI exit code 1);
missing or unreadable files surface as :class:`OSError` subclasses (exit code 2).
"""


class OwnVoiceError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(OwnVoiceError, ValueError):
    """Input violates a documented precondition."""


class ConfigError(ValidationError):
    """Inconsistent or invalid analysis configuration."""


class TooShortError(ValidationError):
    """Signal has fewer samples than one analysis frame."""


class PairingError(ValidationError):
    """Two spectrograms (or a spectrogram and labels) do not line up."""


class NoDataError(ValidationError):
    """Estimation requested from an empty accumulator."""


class LabelFileError(ValidationError):
    """Malformed, overlapping or out-of-range label segments."""


class InsufficientFramesError(ValidationError):
    """Fewer frames than requested clusters."""


class ModelFormatError(ValidationError):
    """Model file is malformed, non-finite or of an unsupported version."""


class WavFormatError(ValidationError):
    """WAV file is truncated or uses an unsupported encoding/layout."""


class ManifestError(ValidationError):
    """Manifest is malformed or inconsistent with the files it references."""


class MissingFileError(OwnVoiceError, FileNotFoundError):
    """A file referenced by a manifest or command does not exist."""
