"""Exception types raised across the package.

Everything derives from InvnetsError so callers can catch broadly; the
subclasses separate shape/contract violations from numerical failures so
tests can assert the precise failure mode.
"""


class InvnetsError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(InvnetsError, ValueError):
    """Operands have incompatible or unsupported shapes/sizes."""


class ParameterError(InvnetsError, ValueError):
    """A scalar argument is outside its admissible range."""


class DomainError(InvnetsError, ValueError):
    """An input value leaves the mathematical domain of an operation."""


class StructureError(InvnetsError, ValueError):
    """A network description is internally inconsistent."""


class ConfigError(InvnetsError, ValueError):
    """An experiment or geometry configuration is invalid."""


class TapeError(InvnetsError, ValueError):
    """The differentiation tape was used outside its contract."""


class SingularOperatorError(InvnetsError, ArithmeticError):
    """A linear system that must be solved is (numerically) singular."""


class CapacityError(InvnetsError, ValueError):
    """A request exceeds a deliberate size cap."""


class DivergenceError(InvnetsError, ArithmeticError):
    """Training produced a non-finite loss.

    Attributes
    ----------
    step : int
        Optimization step at which the loss became non-finite.
    """

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class StateFormatError(InvnetsError, ValueError):
    """A serialized state file is malformed.

    Attributes
    ----------
    offset : int
        Byte offset into the file at which parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class StateVersionError(InvnetsError, ValueError):
    """A serialized state file has an unsupported format version."""
