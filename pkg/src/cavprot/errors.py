class CavprotError(Exception):
    """Base class for numerical failures raised by this package."""


class QuadratureError(CavprotError):
    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (estimated error {error_estimate:.3g})")
        self.error_estimate = error_estimate


class RootFindingError(CavprotError):
    def __init__(self, message, last_iterate, residual):
        super().__init__(f"{message}: last iterate {last_iterate!r}, |residual| = {residual:.3g}")
        self.last_iterate = last_iterate
        self.residual = residual


class SimulationError(CavprotError):
    def __init__(self, message, time=None):
        if time is not None:
            message = f"{message} at t = {time:.6g} ns"
        super().__init__(message)
        self.time = time


class OptimizationError(CavprotError):
    def __init__(self, message, cost):
        super().__init__(f"{message} (final cost {cost:.3g})")
        self.cost = cost
