"""Exception hierarchy shared by every module."""


class VQOCOError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(VQOCOError, ValueError):
    pass


class SlaterViolationError(VQOCOError):
    """No usable interior point: the violation guarantees are void."""


class MissingConstantsError(VQOCOError):
    pass


class WrongPathError(VQOCOError):
    """A specialised update was called on a problem it does not apply to."""


class ConvergenceError(VQOCOError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class InfeasibleError(VQOCOError):
    pass


class IncompleteTraceError(VQOCOError):
    pass


class GenerationError(VQOCOError):
    pass


class ValidityError(VQOCOError, ValueError):
    """Parameter triple violates alpha >= (gamma^2 beta^2 + eta) / 2."""


class ConfigError(VQOCOError, ValueError):
    pass
