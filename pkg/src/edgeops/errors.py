"""Exception hierarchy shared across the package."""


class EdgeOpsError(Exception):
    """Base class for all package errors."""


class GraphError(EdgeOpsError):
    pass


class MalformedGraph(GraphError):
    pass


class DuplicateTensor(GraphError):
    def __init__(self, name: str):
        super().__init__(f"duplicate tensor name {name!r}")
        self.name = name


class CycleDetected(GraphError):
    def __init__(self, node_id: str):
        super().__init__(f"cycle detected through node {node_id!r}")
        self.node_id = node_id


class UnresolvedTensor(GraphError):
    def __init__(self, name: str):
        super().__init__(f"unresolved tensor reference {name!r}")
        self.name = name


class DanglingTensor(GraphError):
    def __init__(self, name: str):
        super().__init__(f"tensor {name!r} is never consumed")
        self.name = name


class BoundaryNotClosed(GraphError):
    def __init__(self, name: str, reason: str = "not producible inside the slice"):
        super().__init__(f"boundary not closed at {name!r}: {reason}")
        self.name = name


class DimMismatch(GraphError):
    def __init__(self, name: str, dims1, dims2):
        super().__init__(f"dims mismatch on {name!r}: {list(dims1)} vs {list(dims2)}")
        self.name = name
        self.dims1 = dims1
        self.dims2 = dims2


class OperatorError(EdgeOpsError):
    pass


class EmptyCalibration(OperatorError):
    pass


class AlreadyQuantized(OperatorError):
    pass


class TooFewBlocks(OperatorError):
    pass


class NoCutTensor(OperatorError):
    pass


class NotTwoBranch(OperatorError):
    pass


class StalePlan(OperatorError):
    pass


class TooLarge(OperatorError):
    pass


class SimError(EdgeOpsError):
    pass


class InvalidStrategy(SimError):
    pass


class MissingModel(SimError):
    pass


class InfeasibleTarget(SimError):
    def __init__(self, tier: str, target: float, floor: float):
        super().__init__(
            f"target {target:.4f}s on {tier} is not above the fixed-latency floor {floor:.4f}s")
        self.tier = tier
        self.target = target
        self.floor = floor


class StatsError(EdgeOpsError):
    pass


class HarnessError(EdgeOpsError):
    pass


class FrameError(HarnessError):
    pass


class RunTimeout(HarnessError):
    pass
