"""Exception types raised across the package."""


class WaveGraspError(Exception):
    """Base class for all package errors."""


class ConfigurationError(WaveGraspError, ValueError):
    """An invalid configuration value. ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ProtocolError(WaveGraspError, RuntimeError):
    """An operation was called out of order (e.g. step after episode end)."""


class InputError(WaveGraspError, ValueError):
    """Malformed numeric input, such as a non-finite observation."""


class CheckpointError(WaveGraspError):
    """Base for checkpoint loading failures."""


class CorruptCheckpointError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointIncompatibleError(CheckpointError):
    """Checkpoint dimensions do not match the environment."""
