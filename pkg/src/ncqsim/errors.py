"""Exception types raised across the package."""


class SimulationError(Exception):
    """Base class for every error raised by ncqsim."""


class NonUnitaryMatrix(SimulationError, ValueError):
    pass


class UnknownRegister(SimulationError, KeyError):
    pass


class DimensionMismatch(SimulationError, ValueError):
    pass


class ZeroProbabilityBranch(SimulationError):
    pass


class MalformedCircuit(SimulationError, ValueError):
    pass


class RegisterSizeMismatch(SimulationError, ValueError):
    pass


class QubitBudgetExceeded(SimulationError):
    pass


class ReweightNotStochastic(SimulationError):
    """Reweighted joint outcomes of the purified circuit do not sum to one."""


class CopyOfEntangledRegister(SimulationError):
    pass


class SecondParallelQuery(SimulationError):
    """A non-adaptive run attempted more than one round of queries."""


class InvalidParameters(SimulationError, ValueError):
    pass


class NotPerfectSquare(InvalidParameters):
    pass


class EnumerationBudgetExceeded(SimulationError):
    pass


class InvalidScheme(SimulationError, ValueError):
    pass


class MissingState(SimulationError, KeyError):
    pass


class BudgetCapReached(SimulationError):
    pass
