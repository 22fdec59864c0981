"""Exception types raised across the package."""


class NumericalError(RuntimeError):
    """Base class for failures of an iterative numerical method."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class PropagationError(NumericalError):
    pass


class NoPeakError(ValueError):
    """The concurrence trace has no interior maximum."""


class OptimizationError(NumericalError):
    pass


class ExclusivityError(ValueError):
    """Two router pairs share a node."""

    def __init__(self, node: str):
        super().__init__(f"node {node!r} appears in more than one pair")
        self.node = node


class CapacityError(ValueError):
    pass
