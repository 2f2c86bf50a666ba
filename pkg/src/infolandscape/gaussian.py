"""Gaussian analogue: ``I(S : X,Y)`` from a covariance matrix and the scan over ``Cov(X,Y)``.

For scalar ``S, X, Y`` the covariance is

    [[a, d, e],
     [d, b, t],
     [e, t, c]]

with ``t = Cov(X, Y)`` free, which plays the role of the correlation domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleCovariance, NotPositiveDefinite, PreconditionError
from .optimize import Location


@dataclass(frozen=True)
class GaussianTriple:
    """Joint covariance of ``(S, X, Y)`` with block sizes ``dims``."""

    sigma: np.ndarray
    dims: tuple[int, int, int] = (1, 1, 1)

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        dims = tuple(int(k) for k in self.dims)
        n = sum(dims)
        if sigma.shape != (n, n):
            raise ValueError(f"covariance shape {sigma.shape} does not match blocks {dims}")
        if not np.allclose(sigma, sigma.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def scalar(cls, a, b, c, d, e, t) -> "GaussianTriple":
        return cls(np.array([[a, d, e], [d, b, t], [e, t, c]], float))


def _logdet_pd(m: np.ndarray, what: str) -> float:
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"{what} is not positive definite") from None
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def gaussian_mi(g: GaussianTriple) -> float:
    """``log(det Sigma_S det Sigma_XY / det Sigma)`` in nats."""
    ds = g.dims[0]
    total = _logdet_pd(g.sigma, "covariance")
    s_block = _logdet_pd(g.sigma[:ds, :ds], "stimulus block")
    r_block = _logdet_pd(g.sigma[ds:, ds:], "response block")
    return max(s_block + r_block - total, 0.0)


def scalar_det(a, b, c, d, e, t):
    return a * b * c - b * e**2 - c * d**2 + 2 * d * e * t - a * t**2


def scalar_mi(a, b, c, d, e, t):
    """``log(a (bc - t^2) / det Sigma)`` for the scalar model."""
    return math.log(a * (b * c - t * t) / scalar_det(a, b, c, d, e, t))


def scalar_mi_derivative(a, b, c, d, e, t):
    """``dI/dt = 2t/(t^2 - bc) + 2(at - de)/det Sigma``."""
    return 2 * t / (t * t - b * c) + 2 * (a * t - d * e) / scalar_det(a, b, c, d, e, t)


def critical_polynomial(a, b, c, d, e):
    """Coefficients ``(c2, c1, c0)`` of the numerator ``g`` of ``dI/dt``.

    ``g(t) = de t^2 - (b e^2 + c d^2) t + bcde`` with roots ``be/d`` and ``cd/e``.
    """
    return (d * e, -(b * e * e + c * d * d), b * c * d * e)


@dataclass(frozen=True)
class GaussianScan:
    lower: float
    upper: float
    roots: tuple[float, ...]
    degenerate: bool
    location: Location
    t_star: float
    i_star: float
    boundary_side: str | None = None


def _endpoint_limit(a, b, c, d, e, t0) -> float:
    """Limit of ``I`` as ``t`` tends to a root ``t0`` of ``det Sigma``."""
    num = b * c - t0 * t0
    if abs(num) > 1e-12 * max(1.0, b * c):
        return math.inf
    den = 2 * d * e - 2 * a * t0
    if den == 0:
        return math.inf
    ratio = (-2 * t0) / den
    if ratio <= 0:
        return math.inf
    return math.log(a * ratio)


def scan_covariance(a, b, c, d, e) -> GaussianScan:
    """Feasible interval of ``t = Cov(X,Y)``, critical roots and location of the minimiser."""
    if a <= 0 or a * b - d * d <= 0:
        raise PreconditionError("needs a > 0 and ab - d^2 > 0")
    # det Sigma = -a t^2 + 2de t + (abc - be^2 - cd^2)
    const = a * b * c - b * e * e - c * d * d
    disc = (d * e) ** 2 + a * const
    if disc <= 0:
        raise InfeasibleCovariance("no t makes the covariance positive definite")
    root = math.sqrt(disc)
    lower, upper = (d * e - root) / a, (d * e + root) / a
    degenerate = d == 0 and e == 0
    if degenerate:
        roots: tuple[float, ...] = ()
    elif d == 0 or e == 0:
        roots = (0.0,)
    else:
        roots = tuple(sorted({b * e / d, c * d / e}))
    if degenerate:
        return GaussianScan(lower, upper, roots, True, Location.INTERIOR, 0.0, scalar_mi(a, b, c, d, e, 0.0))
    inside = [r for r in roots if lower < r < upper]
    if inside:
        t_star = inside[0]
        return GaussianScan(lower, upper, roots, False, Location.INTERIOR, t_star, scalar_mi(a, b, c, d, e, t_star))
    lo_val = _endpoint_limit(a, b, c, d, e, lower)
    hi_val = _endpoint_limit(a, b, c, d, e, upper)
    if lo_val <= hi_val:
        return GaussianScan(lower, upper, roots, False, Location.BOUNDARY, lower, lo_val, "lower")
    return GaussianScan(lower, upper, roots, False, Location.BOUNDARY, upper, hi_val, "upper")
