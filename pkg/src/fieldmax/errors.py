"""Exception hierarchy shared by all fieldmax modules."""


class FieldmaxError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateShape(FieldmaxError):
    """Grid shape too small for the requested operation."""


class DegenerateSize(FieldmaxError):
    """Cell count too small for the normalizing-constant formulas."""


class ThresholdExceeded(FieldmaxError):
    """Dense covariance matrix requested above the configured cell threshold."""


class FactorizationFailed(FieldmaxError):
    """Covariance matrix admitted no symmetric factorization (not PSD)."""


class EmbeddingNotPSD(FieldmaxError):
    """Circulant embedding has negative spectral mass above tolerance."""


class InvalidRank(FieldmaxError):
    """Order-statistic rank outside [1, d]."""


class KindMismatch(FieldmaxError):
    """Field sample kind unsupported by the operation."""


class LambdaOutOfRange(FieldmaxError):
    """Observation rate outside [0, 1]."""


class ShapeMismatch(FieldmaxError):
    """Grid shapes of the operands disagree."""


class TargetOutOfRange(FieldmaxError):
    """Exceedance target not in (0, N) for calibration."""


class InvalidTargets(FieldmaxError):
    """Target pair violates kappa >= tau > 0."""


class OrderViolation(FieldmaxError):
    """Ordered-argument contract violated (x <= y, or phi_v <= phi_u)."""


class CorrelationOutOfRange(FieldmaxError):
    """Correlation coefficient not in (-1, 1)."""


class InvalidNesting(FieldmaxError):
    """Inner rectangle not strictly smaller than the outer one."""


class DegenerateTail(FieldmaxError):
    """Tail probability outside the open interval (0, 1)."""


class RatioBoundExceeded(FieldmaxError):
    """Aspect ratio of the grid exceeds the configured bound."""


class ParseError(FieldmaxError):
    """Malformed configuration document; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class UnknownKey(ParseError):
    """Configuration key not in the schema."""


class InvalidValue(ParseError):
    """Configuration value outside its documented domain."""


class IoError(FieldmaxError):
    """Result persistence failed."""
