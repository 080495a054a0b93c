"""Exception hierarchy.

Every domain failure derives from :class:`UnimarkError` so the CLI can map
them to exit code 1 in one place.
"""


class UnimarkError(Exception):
    """Base class for all domain errors."""


# media-io
class DecodeError(UnimarkError):
    pass


class UnsupportedFormat(DecodeError):
    pass


class InconsistentFrames(DecodeError):
    pass


class NotSingleFrame(UnimarkError):
    pass


class IoError(UnimarkError, OSError):
    pass


# configuration
class ConfigError(UnimarkError):
    pass


class ConfigParseError(ConfigError):
    pass


class UnknownConfigKey(ConfigError):
    pass


class OutOfRangeValue(ConfigError):
    pass


# embedding / extraction
class PayloadRequired(UnimarkError):
    pass


class PayloadLengthError(UnimarkError):
    pass


class CapacityExceeded(UnimarkError):
    pass


class UnsupportedCombination(UnimarkError):
    pass


class MediaTooSmall(UnimarkError):
    pass


class TextTooShort(UnimarkError):
    pass


class CollisionError(UnimarkError):
    pass


class LexiconIntegrityError(UnimarkError):
    pass


# attacks
class UnknownAttack(UnimarkError):
    pass


class BadParams(UnimarkError):
    pass


# metrics
class DimensionMismatch(UnimarkError):
    pass


class TooSmall(UnimarkError):
    pass


class LengthMismatch(UnimarkError):
    pass


class EmptyPositives(UnimarkError):
    pass


# bench
class BadSpec(UnimarkError):
    pass


class BenchmarkError(UnimarkError):
    """A suite item failed; message carries the (item, attack) coordinates."""

    def __init__(self, message, item=None, attack=None):
        super().__init__(message)
        self.item = item
        self.attack = attack
