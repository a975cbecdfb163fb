from typing import List, Optional


class RosenauError(Exception):
    """Base class for every error raised by rosenau_fem."""


class InvalidArgumentError(RosenauError, ValueError):
    pass


class MeshParseError(RosenauError):
    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{where}{message}")


class InvalidMeshError(RosenauError):
    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("invalid mesh: " + "; ".join(self.violations))


class SingularMatrixError(RosenauError):
    def __init__(self, message: str, pivot_row: Optional[int] = None):
        self.pivot_row = pivot_row
        if pivot_row is not None:
            message = f"{message} (pivot row {pivot_row})"
        super().__init__(message)


class StepFailure(RosenauError):
    def __init__(self, step: int, residual: float, message: str = "nonlinear solve did not converge"):
        self.step = step
        self.residual = residual
        super().__init__(f"step {step}: {message} (last residual {residual:.3e})")


class BlowUpError(RosenauError):
    pass


class MissingExactSolutionError(RosenauError):
    pass


class ConfigError(RosenauError):
    pass


class StudyError(RosenauError):
    def __init__(self, message: str, level: Optional[int] = None):
        self.level = level
        super().__init__(message)
