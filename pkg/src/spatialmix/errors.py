"""Exception hierarchy. The CLI prints ``type(err).__name__`` on failure, so class names are part of the interface."""


class SpatialMixError(Exception):
    """Base class for every error raised by this package."""


# prompt / planning
class EmptyPrompt(SpatialMixError, ValueError):
    pass


class NoStems(SpatialMixError, ValueError):
    pass


class PlanSchemaError(SpatialMixError, ValueError):
    """A plan document does not match the strict JSON schema."""


class ParseError(SpatialMixError, ValueError):
    """A template bank file is malformed."""


class SchemaError(SpatialMixError, ValueError):
    """A template violates its invariants."""


class UnknownRir(SpatialMixError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# dsp
class AzimuthOutOfRange(SpatialMixError, ValueError):
    pass


class DelayTooLong(SpatialMixError, ValueError):
    pass


class NonpositiveDistance(SpatialMixError, ValueError):
    pass


class SampleRateMismatch(SpatialMixError, ValueError):
    pass


class Rt60OutOfRange(SpatialMixError, ValueError):
    pass


# rendering
class MissingStem(SpatialMixError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyHrirBank(SpatialMixError, ValueError):
    pass


# analysis
class NotStereo(SpatialMixError, ValueError):
    pass


class TooShort(SpatialMixError, ValueError):
    pass


class BandAboveNyquist(SpatialMixError, ValueError):
    pass


class ItdOutOfRange(SpatialMixError, ValueError):
    pass


# audio io
class UnsupportedFormat(SpatialMixError, ValueError):
    pass


class Corrupt(SpatialMixError, ValueError):
    pass


class ManifestError(SpatialMixError, ValueError):
    def __init__(self, message, entry=None):
        super().__init__(message if entry is None else f"entry {entry}: {message}")
        self.entry = entry
