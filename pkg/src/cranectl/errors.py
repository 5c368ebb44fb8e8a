"""Exception hierarchy for the crane toolkit."""


class CraneError(Exception):
    """Base class for all package errors."""


class InvalidParameter(CraneError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class StateOutOfDomain(CraneError):
    """The plant state left the region where the model is valid."""


class SingularMassMatrix(CraneError):
    """The coupled axis acceleration system could not be solved."""


class MismatchedSampleTime(CraneError, ValueError):
    """Axis discretizations with different sample times were combined."""


class OutOfRange(CraneError, ValueError):
    """An argument (time, regression coefficient, ...) is outside its range."""


class InsufficientData(CraneError, ValueError):
    """Too few samples to run an identification."""


class NumericalBreakdown(CraneError, ArithmeticError):
    """A recursive update produced a non-positive normaliser."""


class NearSingularH(CraneError):
    """The swing decoupling matrix is too close to singular."""


class Infeasible(CraneError):
    """A quadratic program has no feasible point."""


class MaxIterations(CraneError):
    """An iterative solver hit its iteration cap."""


class DegenerateModel(CraneError, ValueError):
    """A model cannot be inverted for feedforward."""


class ConfigError(CraneError, ValueError):
    """A scenario configuration is malformed."""
