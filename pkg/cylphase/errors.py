class CylPhaseError(Exception):
    """Base class for every error raised by cylphase.

    `exit_code` is what the command line driver returns when the error
    reaches it.
    """
    exit_code = 1

    def __init__(self, msg: str, details: list[dict] | None = None):
        super().__init__(msg)
        self.msg = msg
        self.details = details or []


class ConfigError(CylPhaseError, ValueError):
    exit_code = 2


class NumericalValidationError(CylPhaseError):
    exit_code = 3


class WindowOverflowError(NumericalValidationError, ValueError):
    pass


class BandLimitError(NumericalValidationError, ValueError):
    pass


class ResolutionError(NumericalValidationError, ValueError):
    pass


class BoundaryLeakError(NumericalValidationError):
    pass


class StepSizeError(NumericalValidationError, ValueError):
    pass


class SeriesConvergenceError(NumericalValidationError):
    pass


class CoverageError(CylPhaseError):
    exit_code = 4

    def __init__(self, msg: str, missing: list[tuple[int, float]]):
        super().__init__(msg, [{'ell': ell, 'phi': phi} for ell, phi in missing])
        self.missing = missing
