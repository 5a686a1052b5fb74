"""Deep-clustering speech separation trained on spatial phase-difference targets."""
from .dsp import Spectrogram, StftConfig, istft, stft
from .errors import (ConfigError, InfeasibleSceneError, InvalidInputError, InvalidStateError,
                     MixclustError, TrainingDivergedError)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "InfeasibleSceneError", "InvalidInputError", "InvalidStateError",
    "MixclustError", "Spectrogram", "StftConfig", "TrainingDivergedError", "istft", "stft",
]
