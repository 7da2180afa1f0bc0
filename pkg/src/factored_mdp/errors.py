"""Exception types raised across the package."""


class FactoredMDPError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FactoredMDPError, ValueError):
    """Malformed input: wrong shapes, non-stochastic rows, bad parameters."""


class UnsupportedNormError(FactoredMDPError, ValueError):
    """An operator norm was requested for a pairing without a closed form."""


class NotContractiveError(FactoredMDPError):
    """The compressed Bellman operator is not a contraction in the chosen norm."""

    def __init__(self, modulus, message=None):
        self.modulus = float(modulus)
        super().__init__(message or f"compressed operator is not contractive (modulus={self.modulus:.6g})")


class DivergedError(FactoredMDPError):
    """Forced iteration left the overflow guard."""


class MaxIterationsError(FactoredMDPError):
    """An iterative solver ran out of iterations before meeting its tolerance."""

    def __init__(self, iterations, residual):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(f"no convergence after {self.iterations} iterations (residual={self.residual:.3e})")


class AssumptionViolated(FactoredMDPError):
    """A theorem was evaluated on an instance that does not satisfy its assumptions."""

    def __init__(self, assumption, detail=""):
        self.assumption = assumption
        self.detail = detail
        msg = f"assumption violated: {assumption}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
