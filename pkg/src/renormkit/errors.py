"""Exception hierarchy shared by all modules.

The CLI maps every subclass of :class:`RenormError` to exit code 2.
"""


class RenormError(Exception):
    """Base class for input, structural and numerical failures."""


class DomainError(RenormError, ValueError):
    pass


class StructuralError(RenormError, ValueError):
    pass


class NumericalError(RenormError, ArithmeticError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class PreconditionError(RenormError, ValueError):
    pass


class IncompatibilityError(RenormError, ValueError):
    pass


class MappingError(RenormError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class AlignmentError(RenormError, ValueError):
    pass


class ResourceError(RenormError):
    pass


class DataError(RenormError, ValueError):
    pass


class ParameterError(RenormError, ValueError):
    pass
