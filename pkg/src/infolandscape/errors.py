"""Exception hierarchy shared by every module."""


class InfoLandscapeError(Exception):
    """Base class for all package errors."""


class InvalidDistribution(InfoLandscapeError, ValueError):
    """Mass array is negative, non-finite or not normalised."""


class UnknownAxis(InfoLandscapeError, KeyError):
    """An axis name does not belong to the state space."""


class ZeroProbabilityEvent(InfoLandscapeError, ValueError):
    """Conditioning on an event of probability zero."""


class SupportMismatch(InfoLandscapeError, ValueError):
    """First argument of a divergence charges a state the second does not."""


class ZeroProbabilityOnDirection(InfoLandscapeError, ValueError):
    """A derivative was requested along a direction touching a zero state."""


class InconsistentMarginals(InfoLandscapeError, ValueError):
    """The two pairwise marginals disagree on the stimulus distribution."""


class OutOfDomain(InfoLandscapeError, ValueError):
    """Coordinates leave the correlation domain."""


class NotInDomain(InfoLandscapeError, ValueError):
    """A distribution does not have the marginals of the domain."""


class NonConvergence(InfoLandscapeError, RuntimeError):
    """Optimizer stopped before meeting its tolerance.

    The best iterate found is attached as ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class VertexDegenerate(InfoLandscapeError, ValueError):
    """A corner point sits on the boundary of the unit square."""


class NotOnSegre(InfoLandscapeError, ValueError):
    """A 2x2 distribution is not rank one."""


class NotPositiveDefinite(InfoLandscapeError, ValueError):
    """Covariance matrix failed the Cholesky test."""


class InfeasibleCovariance(InfoLandscapeError, ValueError):
    """No value of the free covariance entry gives a positive definite matrix."""


class PreconditionError(InfoLandscapeError, ValueError):
    """Input outside the setting an operation is defined for."""
