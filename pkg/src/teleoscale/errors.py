"""Exception types shared across the package."""


class TeleoscaleError(Exception):
    """Base class for package-specific failures."""


class WireDecodeError(TeleoscaleError):
    """A byte string could not be decoded as a wire message."""


class ChannelClosedError(TeleoscaleError):
    """Send attempted on a closed channel."""


class FramingError(TeleoscaleError):
    """A transport stream was truncated or carried a malformed frame."""


class LogFormatError(TeleoscaleError):
    """A trajectory log file is unreadable (bad header, version, truncation)."""


class FaultError(TeleoscaleError):
    """A controller or follower saw non-finite input; session must stop."""


class ConfigError(TeleoscaleError):
    """An experiment or suite configuration is invalid."""
