"""Error hierarchy shared by the services, the CLI and the HTTP layer.

Each error carries the process exit code the CLI reports for it.
"""


class VFEError(Exception):
    exit_code = 1


class InvalidArgumentError(VFEError, ValueError):
    exit_code = 2


class NoInverseError(InvalidArgumentError):
    pass


class NumericalError(VFEError):
    exit_code = 3


class ClosureError(NumericalError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class BlowUpError(NumericalError):
    def __init__(self, step: int, reason: str):
        super().__init__(f"Integration blew up at step {step}: {reason}")
        self.step = step
        self.reason = reason


class DegenerateFitError(NumericalError):
    pass


class InsufficientDataError(NumericalError):
    pass


class AcceptanceError(VFEError):
    exit_code = 4
