"""
Error handling utility with custom exception classes and error formatting.

This module provides the simulator's exception hierarchy. Every error carries
a stable machine code, a human-readable message, a details dictionary and the
process exit code the CLI should use when the error aborts a command.
"""
from typing import Optional, Dict, Any, Iterable


class SimulationError(Exception):
    """Base exception class for simulator errors."""

    def __init__(
        self,
        code: str,
        message: str,
        details: Optional[Dict[str, Any]] = None,
        exit_code: int = 1
    ):
        """
        Initialize error.

        Args:
            code: Error code (e.g., 'INVALID_SIZE')
            message: Human-readable error message
            details: Additional error details (default: None)
            exit_code: Process exit status for the CLI (default: 1)
        """
        self.code = code
        self.message = message
        self.details = details or {}
        self.exit_code = exit_code
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert error to dictionary format.

        Returns:
            Dictionary with error code, message, and details
        """
        error_dict: Dict[str, Any] = {
            'code': self.code,
            'message': self.message
        }

        if self.details:
            error_dict['details'] = self.details

        return error_dict

    def to_report(self, run_id: Optional[str] = None) -> Dict[str, Any]:
        """
        Convert error to the report format printed by the CLI.

        Args:
            run_id: Experiment run ID for correlation (default: None)

        Returns:
            Report dictionary with error format
        """
        report = {
            'status': 'error',
            'error': self.to_dict()
        }

        if run_id:
            report['meta'] = {'run_id': run_id}

        return report

    def __reduce__(self):
        # subclasses take their own constructor arguments; rebuild from the stored fields
        return (_restore_error, (self.__class__, self.code, self.message, self.details, self.exit_code))


def _restore_error(cls, code, message, details, exit_code):
    error = cls.__new__(cls)
    SimulationError.__init__(error, code, message, details, exit_code)
    return error


class InvalidSizeError(SimulationError):
    """Error raised when an agent count or dimension is out of range."""

    def __init__(self, name: str, value: int, minimum: int):
        message = f"{name} must be at least {minimum}, got {value}"
        super().__init__(
            code='INVALID_SIZE',
            message=message,
            details={'name': name, 'value': value, 'minimum': minimum}
        )


class InvalidParameterError(SimulationError):
    """Error raised when a model parameter violates its declared range."""

    def __init__(self, name: str, value: Any, reason: str):
        message = f"Invalid value for {name} ({value}): {reason}"
        super().__init__(
            code='INVALID_PARAMETER',
            message=message,
            details={'name': name, 'value': value, 'reason': reason}
        )


class InvalidRangeError(SimulationError):
    """Error raised when a step range is empty or reversed."""

    def __init__(self, start: int, end: int):
        message = f"Step range is invalid: t={end} must be >= s={start} >= 1"
        super().__init__(
            code='INVALID_RANGE',
            message=message,
            details={'s': start, 't': end}
        )


class DivergenceUndefinedError(SimulationError):
    """Error raised when a Bregman divergence has no finite value."""

    def __init__(self, index: int):
        message = f"Divergence undefined: reference point is zero at coordinate {index} where x has mass"
        super().__init__(
            code='DIVERGENCE_UNDEFINED',
            message=message,
            details={'coordinate': index}
        )


class UnsupportedCombinationError(SimulationError):
    """Error raised when a geometry/regularizer pair has no closed-form step."""

    def __init__(self, geometry: str, regularizer: str):
        message = f"No closed-form mirror step for geometry '{geometry}' with regularizer '{regularizer}'"
        super().__init__(
            code='UNSUPPORTED_COMBINATION',
            message=message,
            details={'geometry': geometry, 'regularizer': regularizer}
        )


class InvalidStepsizeError(SimulationError):
    """Error raised when a stepsize is not strictly positive."""

    def __init__(self, stepsize: float):
        super().__init__(
            code='INVALID_STEPSIZE',
            message=f"Stepsize must be positive, got {stepsize}",
            details={'stepsize': stepsize}
        )


class EstimationFailedError(SimulationError):
    """Error raised when the Orlicz grid search finds no admissible kappa."""

    def __init__(self, family: str, theta: float, kappa_max: float):
        message = (
            f"No kappa up to {kappa_max:.3g} satisfies the sub-Weibull condition "
            f"for family '{family}' at theta={theta}"
        )
        super().__init__(
            code='ESTIMATION_FAILED',
            message=message,
            details={'family': family, 'theta': theta, 'kappa_max': kappa_max}
        )


class DomainError(SimulationError):
    """Error raised when a point lies outside the problem domain."""

    def __init__(self, violation: float, tolerance: float):
        message = f"Point lies outside the domain (violation {violation:.3e} > {tolerance:.1e})"
        super().__init__(
            code='DOMAIN_ERROR',
            message=message,
            details={'violation': violation, 'tolerance': tolerance}
        )


class SolverFailedError(SimulationError):
    """Error raised when the reference solver does not reach its tolerance."""

    def __init__(self, iterations: int, residual: float, tolerance: float):
        message = (
            f"Reference solver did not converge in {iterations} iterations "
            f"(residual {residual:.3e} > {tolerance:.1e})"
        )
        super().__init__(
            code='SOLVER_FAILED',
            message=message,
            details={'iterations': iterations, 'residual': residual, 'tolerance': tolerance}
        )


class InvariantViolationError(SimulationError):
    """Error raised when an internal invariant breaks (a bug, not user input)."""

    def __init__(self, invariant: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            code='INVARIANT_VIOLATION',
            message=f"Invariant violated: {invariant}",
            details=details or {}
        )


class AlignmentError(SimulationError):
    """Error raised when series do not share a step grid."""

    def __init__(self, expected: int, received: int):
        message = f"Series are not aligned: expected {expected} recorded steps, got {received}"
        super().__init__(
            code='ALIGNMENT_ERROR',
            message=message,
            details={'expected': expected, 'received': received}
        )


class TrialCountMismatchError(SimulationError):
    """Error raised when the number of trial summaries differs from the declared count."""

    def __init__(self, expected: int, received: int):
        message = f"Expected {expected} trial summaries, got {received}"
        super().__init__(
            code='TRIAL_COUNT_MISMATCH',
            message=message,
            details={'expected': expected, 'received': received}
        )


class FitDomainError(SimulationError):
    """Error raised when a log-log rate fit sees nonpositive errors or too few points."""

    def __init__(self, reason: str, points: int):
        super().__init__(
            code='FIT_DOMAIN_ERROR',
            message=f"Rate fit not possible: {reason}",
            details={'reason': reason, 'points': points}
        )


class UsageError(SimulationError):
    """Error raised for invalid command-line or config usage."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            code='USAGE_ERROR',
            message=message,
            details=details or {},
            exit_code=2
        )


class UnknownPresetError(UsageError):
    """Error raised when a preset name does not resolve."""

    def __init__(self, name: str, available: Iterable[str]):
        available = sorted(available)
        super().__init__(
            message=f"Unknown preset '{name}'. Available presets: {', '.join(available)}",
            details={'preset': name, 'available': available}
        )
        self.code = 'UNKNOWN_PRESET'


class ArtifactIOError(SimulationError):
    """Error raised when an artifact cannot be written or read."""

    def __init__(self, path: str, reason: str):
        super().__init__(
            code='ARTIFACT_IO_ERROR',
            message=f"Artifact I/O failed for '{path}': {reason}",
            details={'path': path, 'reason': reason}
        )


def format_error_report(
    error: Exception,
    run_id: Optional[str] = None
) -> Dict[str, Any]:
    """
    Format an exception as a CLI error report.

    Args:
        error: Exception to format
        run_id: Experiment run ID for correlation (default: None)

    Returns:
        Report dictionary with error format

    Example:
        >>> try:
        >>>     preset('fig42')
        >>> except UnknownPresetError as e:
        >>>     print(format_error_report(e, run_id='run_fig1_0_ab12cd34'))
    """
    if isinstance(error, SimulationError):
        return error.to_report(run_id=run_id)

    # Generic error for unexpected exceptions
    generic_error = SimulationError(
        code='INTERNAL_ERROR',
        message='An internal error occurred',
        details={'error_type': type(error).__name__, 'error': str(error)},
        exit_code=1
    )
    return generic_error.to_report(run_id=run_id)
