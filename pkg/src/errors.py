class InstanceFormatError(ValueError):
    """
    Raised when an instance file does not follow the canonical text format.

    Attributes:
      line: 1-based line number of the offending record, or None at end of file.
    """

    def __init__(self, message: str, line: int = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class InstanceValidationError(ValueError):
    """Raised when instance data violates an invariant (symmetry, sign, diagonal, K)."""


class MoveError(ValueError):
    """Raised for a move whose positions are illegal for the current solution."""


class StaleMoveError(MoveError):
    """Raised when a move is applied to a solution that changed after evaluation."""


class SizeGuardError(ValueError):
    """Raised when an instance exceeds the exact solver's size guard."""
