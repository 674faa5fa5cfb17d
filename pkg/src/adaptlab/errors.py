"""Exception types shared across the library."""


class AdaptlabError(Exception):
    """Base class for all library errors."""


class ShapeError(AdaptlabError, ValueError):
    """Operands have inconsistent dimensions."""


class DomainError(AdaptlabError, ValueError):
    """Argument lies outside the domain of a potential or plant."""


class CapabilityError(AdaptlabError):
    """The requested closed-form operation is not available for this kind."""


class NumericalError(AdaptlabError):
    """A computation is too ill-conditioned to trust."""


class ConfigError(AdaptlabError, ValueError):
    """Invalid or inconsistent configuration."""


class GainBoundError(ConfigError):
    """Gains violate a sufficient stability condition under strict enforcement."""


class DivergenceError(AdaptlabError):
    """Integration produced a non-finite state."""

    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"non-finite state at t={t:.6g}")


class StiffnessError(AdaptlabError):
    """Adaptive step size underflowed; the problem looks stiff."""

    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"step underflow at t={t:.6g}")


class SingularityError(AdaptlabError):
    """State hit a singular configuration (e.g. near-collision)."""


class InfeasibleSetError(AdaptlabError):
    """The interpolation constraint set has no solution."""


class StaleAuditError(AdaptlabError):
    """A regularization audit was requested on a non-converged run."""


class DegenerateInputError(AdaptlabError, ValueError):
    """Input is degenerate for the requested operation (e.g. all-nonpositive simplex projection)."""
