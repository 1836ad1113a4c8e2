"""Exception hierarchy shared by all gridsynth modules."""


class GridSynthError(Exception):
    """Base class for every error raised by gridsynth."""


class OverpassParseError(GridSynthError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class EmptyInputError(GridSynthError):
    pass


class AttachmentError(GridSynthError):
    def __init__(self, message, building_ids=()):
        self.building_ids = list(building_ids)
        super().__init__(message)


class NoPathError(GridSynthError):
    pass


class EstimationError(GridSynthError):
    pass


class ConfigError(GridSynthError):
    pass


class PlanningError(GridSynthError):
    pass


class InfeasibleCapacityError(PlanningError):
    pass


class SolverTimeoutError(PlanningError):
    def __init__(self, message, seconds=0.0, history=()):
        self.seconds = seconds
        self.history = list(history)
        super().__init__(message)


class CableSizingError(PlanningError):
    def __init__(self, message, edges=()):
        self.edges = list(edges)
        super().__init__(message)


class PowerFlowError(GridSynthError):
    def __init__(self, message, trace=()):
        self.trace = list(trace)
        super().__init__(message)


class ConvergenceError(PowerFlowError):
    pass


class DivergenceError(PowerFlowError):
    pass


class ModelIntegrityError(GridSynthError):
    pass


class BinningError(GridSynthError):
    pass
