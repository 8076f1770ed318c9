"""Exception types raised by the clustering pipeline."""


class DCDError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(DCDError, ValueError):
    pass


class InvalidInputError(DCDError, ValueError):
    pass


class IsolatedNodeError(InvalidInputError):
    """A node of the similarity graph has no incident positive weight."""

    def __init__(self, node):
        self.node = int(node)
        super().__init__(f"node {self.node} is isolated (all-zero row)")


class DegenerateClusterError(DCDError, ArithmeticError):
    """A column of the assignment matrix carries (numerically) no mass.

    ``trace`` holds the partial :class:`~dcdclust.dcd.RunTrace` when the
    error interrupts an optimization run.
    """

    def __init__(self, message, cluster=None, trace=None):
        super().__init__(message)
        self.cluster = cluster
        self.trace = trace


class NumericError(DCDError, ArithmeticError):
    pass


class AllCandidatesFailedError(DCDError):
    def __init__(self, reasons):
        self.reasons = list(reasons)
        lines = "; ".join(f"{src}: {why}" for src, why in self.reasons)
        super().__init__(f"every initialization candidate failed ({lines})")
