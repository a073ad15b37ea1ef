class ConstructionError(ValueError):
    """A geometric construction cannot be carried out with the given parameters."""


class NeckPinch(RuntimeError):
    """The annulus solve collapsed its neck: no least-area annulus at these parameters."""

    def __init__(self, message: str, min_circumference: float, report=None):
        super().__init__(message)
        self.min_circumference = min_circumference
        self.report = report


class SolverError(RuntimeError):
    pass
