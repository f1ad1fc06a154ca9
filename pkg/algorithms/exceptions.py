"""
Error types raised by the numerical core.

Commands translate these into process exit codes (see experiments.engine).
"""


class MaapnnError(Exception):
    """Base class for all toolkit errors"""


class ConfigurationError(MaapnnError, ValueError):
    """Invalid problem, network, loss or training settings"""


class CoefficientError(ConfigurationError):
    """A coefficient field produced a non-physical value (e.g. sigma <= 0)"""


class NonFiniteLossError(MaapnnError, ArithmeticError):
    """Loss or gradient is NaN/inf: the training state diverged"""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class SolverError(MaapnnError, RuntimeError):
    """A reference solver could not produce a solution"""


class MissingReferenceError(MaapnnError, LookupError):
    """No reference field is available for the requested problem or snapshot"""
