"""Exception hierarchy shared across the package."""


class SpdCrcError(Exception):
    """Base class for every error raised by spdcrc."""


class InvalidMatrix(SpdCrcError, ValueError):
    pass


class NumericalDegeneracy(SpdCrcError, ArithmeticError):
    pass


class DimensionMismatch(SpdCrcError, ValueError):
    pass


class EmptyGallery(SpdCrcError, ValueError):
    pass


class TooFewSamples(SpdCrcError, ValueError):
    pass


class InvalidSample(SpdCrcError, ValueError):
    pass


class UnsupportedImage(SpdCrcError, ValueError):
    pass


class SingularSystem(SpdCrcError, ArithmeticError):
    pass


class NotPsd(SpdCrcError, ValueError):
    pass


class IoError(SpdCrcError, OSError):
    pass


class ManifestError(SpdCrcError, ValueError):
    pass


class InsufficientSets(SpdCrcError, ValueError):
    pass
