"""Dynamic-regret exponential weighting for prediction with expert advice.

Subpackages and modules:

* :mod:`trackexp.simplex` - simplex arithmetic and the truncation projection
* :mod:`trackexp.mixer` - ``W_{-1}`` and the uniform-mixing coefficients
* :mod:`trackexp.learners` - uniform-mix, truncated, mapped, doubling and UTEW learners
* :mod:`trackexp.adversaries` - lower-bound games and the script file format
* :mod:`trackexp.scenarios` - surrogate losses, noise, floors, bandits, discounting
* :mod:`trackexp.oracle` - brute-force competitors and per-step inequality checkers
* :mod:`trackexp.kernels` - batch trajectories (compiled when available)
* :mod:`trackexp.harness` - the ``trackexp`` command line
"""
from .errors import (
    ConfigError,
    DomainError,
    InfeasibleBoxError,
    InfiniteDivergenceError,
    PreconditionError,
    SimplexError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "InfeasibleBoxError", "InfiniteDivergenceError",
    "PreconditionError", "SimplexError", "__version__",
]
