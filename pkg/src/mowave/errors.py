"""Exception types shared across the package.

Every error raised on purpose derives from :class:`MowaveError` so callers
can catch the package's failures with one clause while still seeing the
specific category (bad configuration, geometry violation, solver failure,
and so on) in the type.
"""


class MowaveError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MowaveError, ValueError):
    """A configuration document or parameter set is invalid."""


class GeometryError(MowaveError, ValueError):
    """A geometric precondition is violated (bad shape, bad array layout)."""


class DomainError(MowaveError, ValueError):
    """A quantity was queried outside the domain where it is defined."""


class SupersonicError(MowaveError, ValueError):
    """The emitter trajectory is not subsonic where the model requires it."""


class SolverError(MowaveError, RuntimeError):
    """An iterative solve failed to reach its tolerance."""


class AssemblyError(MowaveError, RuntimeError):
    """A discrete operator could not be assembled or factorized."""


class SingularFieldError(MowaveError, RuntimeError):
    """A field was evaluated on top of a source or panel singularity."""


class EmptyDataError(MowaveError, ValueError):
    """An operation that needs nonzero input data received all zeros."""
