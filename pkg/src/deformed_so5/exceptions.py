"""Exception hierarchy shared by all modules."""


class So5Error(Exception):
    """Base class for every error raised by this package."""


class DegenerateMetric(So5Error, ValueError):
    """The metric diag(alpha*lam, lam, 1, 1, 1) is singular (alpha*lam == 0)."""


class DomainError(So5Error, ValueError):
    """An argument lies outside the domain of a formula."""


class BranchDomainError(DomainError):
    """The closed-form pipeline does not apply to this initial condition."""


class NotOnStratum(DomainError):
    """A point expected to satisfy a=0 does not."""


class OffConstraint(DomainError):
    """A cotangent point is not on the quadric constraint set."""


class SingularA(DomainError):
    """A 2x2 matrix with zero determinant was given to the SL(2) action."""


class SingularPoint(DomainError):
    """q and eta^-1 p are linearly dependent."""


class InconsistentInput(DomainError):
    """Signature and level value contradict each other."""


class SingularSolve(So5Error, ArithmeticError):
    """A linear solve met a singular matrix."""


class ConvergenceError(So5Error, ArithmeticError):
    """An iterative method did not reach the requested tolerance."""


class NonConvergence(ConvergenceError):
    """Adaptive quadrature exhausted its subdivision budget."""


class NoSignChange(So5Error, ValueError):
    """A root bracket does not enclose a sign change."""


class StepSizeUnderflow(So5Error, ArithmeticError):
    """The step-size controller stalled or the step budget ran out."""


class NonFiniteState(So5Error, ArithmeticError):
    """The integrated state became inf or nan."""


class BranchAmbiguity(So5Error, ArithmeticError):
    """Continuity tracking could not separate candidate branches."""


class ReconstructionInconsistency(So5Error, ArithmeticError):
    """Algebraic reconstruction has no real solution within tolerance."""
