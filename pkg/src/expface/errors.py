"""Exception taxonomy shared by every expface module.

The CLI maps these onto its exit codes: ConfigError -> 2, OSError -> 3,
TrainingDivergedError -> 4, anything else (including PreconditionError
and internal invariant breaches) -> 5.
"""


class ExpFaceError(Exception):
    """Base class for all expface errors."""


class ConfigError(ExpFaceError):
    """Invalid user-supplied configuration (bad margin range, unknown key, ...)."""


class DomainError(ExpFaceError):
    """Numeric input outside its mathematical domain (angle, zero-norm vector)."""


class NonDifferentiablePointError(ExpFaceError):
    """Derivative requested at a point where it is not defined."""


class PreconditionError(ExpFaceError):
    """A documented operation precondition was violated by the caller."""


class TrainingDivergedError(ExpFaceError):
    """The toy training loop produced a non-finite loss or parameter."""
