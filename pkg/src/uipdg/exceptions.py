class UIPDGError(Exception):
    """Base class for library errors."""


class ConfigurationError(UIPDGError, ValueError):
    pass


class MeshFormatError(UIPDGError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class TopologyError(UIPDGError, ValueError):
    pass


class BoundaryConditionError(UIPDGError, ValueError):
    pass


class LocalSolveError(UIPDGError, ArithmeticError):
    def __init__(self, element, message):
        self.element = element
        super().__init__(f"element {element}: {message}")


class SolverError(UIPDGError, RuntimeError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class KelloggAssignmentError(UIPDGError, RuntimeError):
    def __init__(self, message, defects):
        self.defects = defects
        super().__init__(message)
