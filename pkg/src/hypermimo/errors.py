"""Exception hierarchy shared by the package."""


class HyperMimoError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HyperMimoError, ValueError):
    """A scalar argument lies outside its admissible range."""


class DimensionError(HyperMimoError, ValueError):
    """Array shapes do not agree."""


class NonSymmetricError(HyperMimoError, ValueError):
    pass


class NonPSDError(HyperMimoError, ValueError):
    pass


class SingularMatrixError(HyperMimoError, ValueError):
    pass


class UnsupportedOrderError(HyperMimoError, ValueError):
    pass


class SearchSpaceTooLarge(HyperMimoError, ValueError):
    pass


class DivergenceError(HyperMimoError, FloatingPointError):
    """Training produced a non-finite loss."""


class BankFormatError(HyperMimoError):
    """An archive on disk is malformed or truncated."""


class ChecksumError(BankFormatError):
    pass


class VersionError(BankFormatError):
    pass


class ConfigError(HyperMimoError, ValueError):
    pass


class MissingArtifactError(HyperMimoError, FileNotFoundError):
    """A pipeline stage needs the output of an earlier stage that is absent."""
