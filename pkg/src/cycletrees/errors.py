"""Exception types shared across the package."""


class CycletreesError(Exception):
    """Base class for all package errors."""


class PanelParseError(CycletreesError):
    """CSV cell or date failed to parse; message names the offending row."""


class PanelIntegrityError(CycletreesError):
    """Structural violation: duplicate date, ragged row, gap in the monthly index."""


class TransformDomainError(CycletreesError):
    """Nonpositive level fed to a return transform; message identifies the cell."""


class DegenerateScaleError(CycletreesError):
    """A series has zero variance and cannot be standardized."""


class ShapeError(CycletreesError):
    """Model shape is inconsistent or unsupported."""


class NonCausalModelError(CycletreesError):
    """Simulation refused: an autoregressive block has spectral radius >= 1."""


class ConditioningError(CycletreesError):
    """Innovation covariance not invertible during filtering."""

    def __init__(self, period: int):
        self.period = period
        super().__init__(f"innovation covariance not invertible at period {period}")


class NumericError(CycletreesError):
    """Non-finite values or impossible moments encountered."""


class DegenerateUpdateError(CycletreesError):
    """A conditional-maximization coordinate update has a zero denominator."""


class InputError(CycletreesError):
    """Input data fails a precondition (too short, wrong dimensions, ...)."""


class ConfigError(CycletreesError):
    """Invalid run configuration."""


class SelectionError(CycletreesError):
    """Every hyperparameter candidate failed; message lists the failures."""


class EnsembleConstructionError(CycletreesError):
    """Repeated degenerate partitions while building an ensemble."""
