"""Exception types raised across the toolkit."""


class DiagnosisError(Exception):
    """Base class for all errors raised by sadiag."""


class ParseError(DiagnosisError):
    """A file could not be parsed; the message names the line or byte offset."""


class EmptyInputError(ParseError):
    """A data file contained no samples."""


class LengthError(DiagnosisError, ValueError):
    """Not enough samples for the requested segmentation."""


class ConfigurationError(DiagnosisError, ValueError):
    """A parameter is out of range or inconsistent with the data shape."""


class RankError(DiagnosisError, ValueError):
    """Data rank is below the requested subspace dimension."""


class DegenerateInputError(DiagnosisError, ValueError):
    """Input admits no meaningful result (constant vector, single class...)."""


class ConvergenceError(DiagnosisError):
    """The SVM solver hit its iteration cap before reaching KKT tolerance."""


class InsufficientDataError(DiagnosisError, ValueError):
    """Too few samples for the requested estimate or split."""


class ScoringError(DiagnosisError):
    """Scoring was requested but target labels are unavailable."""


class IndefiniteKernelWarning(UserWarning):
    """Training kernel has noticeable negative curvature; the dual objective
    is no longer concave and the solver relies on its iteration cap."""
