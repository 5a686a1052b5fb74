"""Exception hierarchy shared by every module."""


class MixclustError(Exception):
    """Base class for all package errors."""


class InvalidInputError(MixclustError, ValueError):
    """An argument violates an operation's preconditions."""


class ConfigError(MixclustError):
    """A configuration cannot be satisfied (missing files, too few speakers, ...)."""


class InfeasibleSceneError(MixclustError):
    """Scene sampling gave up after exhausting its retry budget."""


class InvalidStateError(MixclustError):
    """An object was used in a state that no longer matches its inputs."""


class TrainingDivergedError(MixclustError):
    """Training produced a non-finite loss.

    ``checkpoint`` holds the state after the last completed epoch.
    """

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint
