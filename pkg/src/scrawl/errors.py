"""Exception hierarchy shared across the package."""


class ScrawlError(Exception):
    """Base class for all package-specific errors."""


class ClosureViolation(ScrawlError):
    """A simplex is missing one of its faces and auto-closure is off."""


class DuplicateSimplex(ScrawlError):
    """The same vertex set appears twice within one order."""


class FeatureShapeMismatch(ScrawlError):
    """A feature matrix does not align with the simplex count of its order."""


class UnknownSimplex(ScrawlError):
    """A simplex id does not exist in the complex."""


class WalkTooShort(ScrawlError):
    """Walk length is below the receptive field of the convolution stack."""


class GraphNotRecorded(ScrawlError):
    """backward() was called on a tensor without a recorded forward graph."""


class FeatureLookupFailure(ScrawlError):
    """A walk references a simplex outside the supplied feature matrices."""


class ParseError(ScrawlError):
    """A dataset file is malformed; the message carries the line number."""


class EmptyDataset(ScrawlError):
    """A dataset file contains no simplices."""


class AllMasked(ScrawlError):
    """Masking removed every known value of some order."""


class EmptyEvalMask(ScrawlError):
    """A metric was requested over an empty evaluation mask."""


class ConfigError(ScrawlError):
    """Invalid or inconsistent run configuration."""


class ConfigHashMismatch(ScrawlError):
    """Checkpoint architecture is incompatible with the requested dataset."""
