"""Exception and warning types shared across the package."""


class ChiralWindingError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrixError(ChiralWindingError, ArithmeticError):
    """A matrix was singular to working precision (pivot below threshold)."""


class ConvergenceError(ChiralWindingError, ArithmeticError):
    """An iterative routine did not converge within its budget."""


class NotSkewSymmetricError(ChiralWindingError, ValueError):
    pass


class DomainError(ChiralWindingError, ValueError):
    """Argument outside the domain of a special function."""


class BranchCutError(DomainError):
    pass


class InternalConsistencyError(ChiralWindingError, RuntimeError):
    """A self-check on cached or derived data failed."""


class CoincidentPointsError(ChiralWindingError, ValueError):
    """Two parameter points coincide where the formulas need them distinct."""


class RefinementExhaustedError(ChiralWindingError, ArithmeticError):
    """Phase unwrapping could not resolve a step; the gap probably closed."""


class WindingDisagreementError(ChiralWindingError, ArithmeticError):
    """Phase tracking and contour integration gave different integers."""


class RejectionRateError(ChiralWindingError, RuntimeError):
    """Too many Monte Carlo samples were rejected as singular."""


class BudgetExceededError(ChiralWindingError, RuntimeError):
    """A quadrature ran out of its evaluation budget."""


class ConfigError(ChiralWindingError, ValueError):
    pass


class NearSingularWarning(RuntimeWarning):
    """Evaluation point is close to a singularity; expect precision loss."""


class LowEffectiveSampleSizeWarning(RuntimeWarning):
    pass
