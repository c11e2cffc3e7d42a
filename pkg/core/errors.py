"""
Error types for toric-spectral
Every failure raised by the numerical core derives from ToricSpectralError so the CLI
can map it onto the exit-code contract.
"""

import logging

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID_INPUT = 2


class ToricSpectralError(Exception):
    """Base class for all library errors"""


class InvalidInputError(ToricSpectralError, ValueError):
    """Bad arguments: dimension mismatch, invalid profile, bad config values"""


class BoundaryError(InvalidInputError):
    """Point on or outside the open polytope, or outside a coordinate region"""


class QuadratureError(ToricSpectralError, ArithmeticError):
    """A quadrature rule or transform produced non-finite values"""


class ReconstructionError(ToricSpectralError):
    """Recovered data is unusable (nonpositive V, corrupted input)"""


class ToleranceError(ToricSpectralError):
    """A verification tolerance was violated"""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the CLI exit code (0 pass / 1 failure / 2 invalid input)"""
    if isinstance(exc, InvalidInputError):
        return EXIT_INVALID_INPUT
    if isinstance(exc, ToricSpectralError):
        return EXIT_FAILURE
    logging.getLogger(__name__).exception(f"❌ Unexpected error: {exc}")
    return EXIT_FAILURE
