"""Exception types shared across the package.

Two mixin categories drive the CLI exit codes: InputDataError (bad files,
bad plans, bad arguments -> exit 2) and NumericalError (singular systems,
undefined criteria -> exit 3).
"""


class FunsensError(Exception):
    """Base class for all package errors."""


class InputDataError(FunsensError):
    """Invalid user-supplied data or configuration."""


class NumericalError(FunsensError):
    """A numerical procedure cannot produce a defined result."""


class BasisError(InputDataError):
    """Basis construction parameters are inconsistent."""


class DomainError(InputDataError):
    """A point or grid lies outside the domain it is evaluated on."""


class SingularFitError(NumericalError):
    """The penalized least-squares system is singular."""


class GcvUndefinedError(NumericalError):
    """GCV denominator vanishes (pure interpolation)."""


class NoValidLambdaError(NumericalError):
    """No smoothing-weight candidate yields a defined GCV score."""


class PlanError(InputDataError):
    """Experimental plan construction failed."""


class IncompleteDesignError(InputDataError):
    """A (model, run_label) combination required by the plan is missing."""


class DuplicateRunError(InputDataError):
    """The same (model, run_label) appears more than once."""


class DomainMismatchError(InputDataError):
    """Run curves do not share a common domain."""


class GridMismatchError(InputDataError):
    """Index vectors do not share grid length or input set."""


class DecompositionError(InputDataError):
    """Corner table is incomplete or the input dimension is too large."""


class DesignMatrixError(InputDataError):
    """Contrast sets cannot be assembled into one regression design."""


class SingularDesignError(NumericalError):
    """Regression design matrix is rank deficient."""


class VarianceUndefinedError(NumericalError):
    """Residual variance is unavailable (too few observations)."""


class RunTableError(InputDataError):
    """Run-table file violates the long-format schema."""


class ConfigError(InputDataError):
    """Analysis configuration file or value is invalid."""
