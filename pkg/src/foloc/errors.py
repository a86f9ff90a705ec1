"""Exception types shared across the package."""


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class NonUniformSampling(PipelineError):
    """Timestamps are not strictly increasing with uniform spacing."""


class ShapeMismatch(PipelineError):
    """Paired channel blocks disagree in shape or machine count."""


class TooShort(PipelineError):
    """Fewer samples than the ingestion minimum."""


class Diverged(PipelineError):
    """Integration produced a state magnitude beyond the stability guard."""


class NoEquilibrium(PipelineError):
    """Power-balance solve did not converge."""


class NotAnEquilibrium(PipelineError):
    """Supplied operating point does not satisfy power balance."""


class SpectrumTooShort(PipelineError):
    """Spectrum has fewer bins than the peak-detector lag window."""


class NoCandidates(PipelineError):
    """No periodic component observable; the pipeline aborts with this verdict."""


class RankDeficient(PipelineError):
    """A least-squares subproblem lost column rank."""


class Unlocatable(PipelineError):
    """Regression succeeded but the forcing block is dense and uniform."""


class ParseError(PipelineError):
    """Malformed input file row or header."""


class UnitError(PipelineError):
    """Unknown unit tag in an input file header."""


class IoError(PipelineError):
    """Underlying read/write failure."""
