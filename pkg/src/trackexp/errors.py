"""Exception types raised across the package.

All derive from :class:`ValueError` so callers that only care about bad
input can catch that.
"""


class SimplexError(ValueError):
    """A vector is not (close enough to) a probability distribution."""


class InfiniteDivergenceError(ValueError):
    """KL divergence is infinite: mass on an entry where the reference is 0."""


class InfeasibleBoxError(ValueError):
    """No distribution fits inside the requested truncation box."""


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class PreconditionError(ValueError):
    """A checker was called with inputs violating its stated precondition."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
