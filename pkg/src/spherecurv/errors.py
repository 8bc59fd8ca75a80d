"""Exception types shared across the package."""


class SphereCurvError(Exception):
    """Base class for all package-specific errors."""


class NonZeroMean(SphereCurvError):
    """Poisson right-hand side has a mean beyond the solvability tolerance."""

    def __init__(self, mean, tol):
        self.mean = mean
        self.tol = tol
        super().__init__(f"rhs mean {mean:.3e} exceeds solvability tolerance {tol:.1e}")


class ZeroClass(SphereCurvError):
    """A projective class was represented by the zero vector."""


class SpecMismatch(SphereCurvError):
    """Operands built over different bundle data or grids."""


class InvalidLambda(SphereCurvError):
    """Coupling constant outside the admissible range."""


class NonConvergence(SphereCurvError):
    """Newton/continuation failed; carries the continuation trace."""

    def __init__(self, message, trace=None):
        self.trace = trace if trace is not None else []
        super().__init__(message)


class SweepInconclusive(SphereCurvError):
    """Shooting sweep could not resolve the sign pattern of the mismatch."""


class QuadratureSingular(SphereCurvError):
    """Cauchy-kernel quadrature hit (or failed to isolate) a singular node."""


class HypothesisViolation(SphereCurvError):
    """Family parameters violate the inequality they are required to satisfy."""
