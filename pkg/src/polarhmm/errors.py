"""Exception types shared across the toolkit."""


class PolarHMMError(Exception):
    """Base class for all toolkit errors."""


class CompositeModulus(PolarHMMError):
    """Field modulus is not prime."""


class SingularKernel(PolarHMMError):
    """Kernel matrix is not invertible over the field."""


class DimensionMismatch(PolarHMMError):
    """Vector or matrix dimensions do not agree."""


class LengthMismatch(PolarHMMError):
    """Sequence length is incompatible with the block layout."""


class UnspecifiedSymbol(PolarHMMError):
    """An operation requiring fully specified symbols saw an unspecified entry."""


class ImpossibleObservation(PolarHMMError):
    """Observed symbol has zero likelihood under every reachable hidden state."""


class StreamCorrupt(PolarHMMError):
    """Compressed stream does not match its auxiliary information."""


class InvalidPreset(PolarHMMError):
    """Unknown source preset name."""


class FormatError(PolarHMMError):
    """A file could not be parsed or failed validation."""
