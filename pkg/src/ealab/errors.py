"""Exception types shared across the package."""


class EaLabError(Exception):
    """Base class for all package errors."""


class InvalidConfig(EaLabError, ValueError):
    """An EaConfig combines options that do not fit together."""


class IdenticalParents(EaLabError, ValueError):
    """A difference-based crossover was asked to recombine equal parents."""


class SizeLimit(EaLabError):
    """An exact state space would exceed the configured cap."""


class NotAbsorbing(EaLabError):
    """Some transient state cannot reach the optimal set."""


class MappingInvalid(EaLabError, ValueError):
    """A state mapping does not preserve optimality."""
