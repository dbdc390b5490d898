"""Exception types shared across the package."""


class BrdError(Exception):
    """Base class for all errors raised by brdlab."""


class TieDetected(BrdError):
    """Two payoffs in one (player, environment) slice are exactly equal."""


class DomainError(BrdError, ValueError):
    """A closed-form quantity was evaluated outside its domain."""


class EmptySample(BrdError, ValueError):
    pass


class ConfigError(BrdError, ValueError):
    """Invalid experiment configuration or CLI usage."""


class BudgetExceeded(BrdError):
    """Exhaustive enumeration would exceed the configured budget."""


class InvariantViolation(BrdError, AssertionError):
    """A structural identity of the dynamics failed at runtime.

    Examples are ``T >= F`` on a clockwork path or ``F_X != F_Y`` on a
    coupled run. These indicate a logic bug, never a usage error.
    """
