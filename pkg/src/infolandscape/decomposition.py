"""Information decompositions of ``I(S : X,Y)``.

Two decompositions are provided. The BROJA decomposition splits ``I`` into
shared, unique and synergistic parts using the minimum of ``I`` over the
correlation domain. The series decomposition

    I = I_lin + I_ss + I_ci + I_cd

separates the sum of single-response informations, the signal-similarity
correction, and the stimulus-independent and stimulus-dependent parts of
the noise correlations. Arrays are indexed ``[s, x, y]`` with responses
``r = (x, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import JointDistribution
from .domain import (
    CorrelationDomain,
    MarginalPair,
    build_domain,
    derivative_along_basis,
    embed_array,
    shuffle_array,
)
from .errors import PreconditionError, SupportMismatch
from .optimize import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    MinimizerReport,
    information,
    minimize_information,
)

RANK_TOL = 1e-10


def _mass(q) -> np.ndarray:
    return q.mass if isinstance(q, JointDistribution) else np.asarray(q, float)


def _mi2(table: np.ndarray) -> float:
    r = table.sum(axis=1)
    c = table.sum(axis=0)
    pos = table > 0
    return max(float(np.sum(table[pos] * np.log(table[pos] / np.outer(r, c)[pos]))), 0.0)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, float).reshape(-1)
    q = np.asarray(q, float).reshape(-1)
    pos = p > 0
    if np.any(q[pos] <= 0):
        raise SupportMismatch("first argument charges states outside the support of the second")
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))


def shuffle_of(q) -> np.ndarray:
    """``Q0(s,x,y) = P(s,x) P(s,y) / P(s)`` built from the marginals of ``q``."""
    m = _mass(q)
    p_s = m.sum(axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = m.sum(axis=2)[:, :, None] * m.sum(axis=1)[:, None, :] / p_s[:, None, None]
    return np.where(p_s[:, None, None] > 0, out, 0.0)


def response_product(q) -> np.ndarray:
    """``P0(x, y) = P(x) P(y)``, the product of the single-response marginals."""
    m = _mass(q)
    return np.outer(m.sum(axis=(0, 2)), m.sum(axis=(0, 1)))


# ----------------------------------------------------------------- BROJA


@dataclass(frozen=True)
class BrojaPid:
    si: float
    ui_x: float
    ui_y: float
    ci: float
    i_total: float
    i_sx: float
    i_sy: float
    i_star: float
    minimizer: MinimizerReport | None = None


def broja_pid(q, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS, report: MinimizerReport | None = None) -> BrojaPid:
    """Shared, unique and synergistic information of ``S`` in ``(X, Y)``."""
    m = _mass(q)
    i_total = information(m)
    i_sx = _mi2(m.sum(axis=2))
    i_sy = _mi2(m.sum(axis=1))
    if report is None:
        d = build_domain(MarginalPair.from_joint(m))
        report = minimize_information(d, tol=tol, max_iters=max_iters)
    i_star = min(report.i_star, i_total)
    return BrojaPid(
        si=i_sx + i_sy - i_star,
        ui_x=i_star - i_sy,
        ui_y=i_star - i_sx,
        ci=i_total - i_star,
        i_total=i_total,
        i_sx=i_sx,
        i_sy=i_sy,
        i_star=i_star,
        minimizer=report,
    )


# ------------------------------------------------------- series expansion


@dataclass(frozen=True)
class SeriesDecomposition:
    i_lin: float
    i_ss: float
    i_ci: float
    i_cd: float
    i_total: float
    i_shuffle: float
    i_cd_difference: float


def conditional_divergence(q, q0) -> float:
    """``sum_r P(r) D(P(S|r) || Q0(S|r))``."""
    m = _mass(q)
    m0 = np.asarray(q0, float)
    p_r = m.sum(axis=0)
    q_r = m0.sum(axis=0)
    total = 0.0
    for idx in zip(*np.nonzero(p_r > 0)):
        col = m[(slice(None),) + idx]
        col0 = m0[(slice(None),) + idx]
        if q_r[idx] <= 0:
            raise SupportMismatch(f"response {idx} has zero probability under the shuffle law")
        total += p_r[idx] * _kl(col / p_r[idx], col0 / q_r[idx])
    return float(total)


def series_decomposition(q) -> SeriesDecomposition:
    """``I_lin``, ``I_ss``, ``I_ci`` and ``I_cd`` of ``q`` (nats)."""
    m = _mass(q)
    q0 = shuffle_of(m)
    i_total = information(m)
    i_shuffle = information(q0)
    i_lin = _mi2(m.sum(axis=2)) + _mi2(m.sum(axis=1))
    i_ss = -_kl(q0.sum(axis=0), response_product(m))
    i_cd = conditional_divergence(m, q0)
    i_cd_diff = _kl(m, q0) - _kl(m.sum(axis=0), q0.sum(axis=0))
    return SeriesDecomposition(
        i_lin=i_lin,
        i_ss=i_ss,
        i_ci=i_total - i_shuffle - i_cd,
        i_cd=i_cd,
        i_total=i_total,
        i_shuffle=i_shuffle,
        i_cd_difference=i_cd_diff,
    )


@dataclass(frozen=True)
class CorrCoefficients:
    gamma: np.ndarray  # [s, x, y]
    mu: np.ndarray  # [x, y]


def correlation_coefficients(q) -> CorrCoefficients:
    """``gamma(r|s) = Q(r|s)/Q0(r|s) - 1`` and ``mu(r) = Q0(r)/P0(r) - 1`` (``-1`` off support)."""
    m = _mass(q)
    q0 = shuffle_of(m)
    p_s = m.sum(axis=(1, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = m / p_s[:, None, None]
        cond0 = q0 / p_s[:, None, None]
        gamma = np.where(cond0 > 0, cond / cond0 - 1.0, -1.0)
        p0 = response_product(m)
        q0r = q0.sum(axis=0)
        mu = np.where(p0 > 0, q0r / p0 - 1.0, -1.0)
    gamma = np.where(p_s[:, None, None] > 0, gamma, -1.0)
    return CorrCoefficients(gamma, mu)


# ------------------------------------------------------- translation


@dataclass(frozen=True)
class Translation:
    ci0: float
    ci: float
    si: float
    i_ss: float
    i_ci: float
    i_cd: float
    residual_si_plus: float  # SI + CI0 + I_ss
    residual_si_minus: float  # SI - CI0 + I_ss
    residual_ci: float  # CI - (I_ci + I_cd + CI0)
    residual_shuffle: float  # I(Q0) - (SI + UI_x + UI_y + CI0)


def translation(q, pid: BrojaPid | None = None, series: SeriesDecomposition | None = None) -> Translation:
    """Relations between the BROJA terms and the series expansion.

    ``CI0 = I(Q0) - I(Q*)`` is the synergy of the shuffle law.
    """
    m = _mass(q)
    pid = pid or broja_pid(m)
    series = series or series_decomposition(m)
    ci0 = series.i_shuffle - pid.i_star
    return Translation(
        ci0=ci0,
        ci=pid.ci,
        si=pid.si,
        i_ss=series.i_ss,
        i_ci=series.i_ci,
        i_cd=series.i_cd,
        residual_si_plus=pid.si + ci0 + series.i_ss,
        residual_si_minus=pid.si - ci0 + series.i_ss,
        residual_ci=pid.ci - (series.i_ci + series.i_cd + ci0),
        residual_shuffle=series.i_shuffle - (pid.si + pid.ui_x + pid.ui_y + ci0),
    )


# ------------------------------------------------------- vanishing of I_cd


@dataclass(frozen=True)
class ZeroSpace:
    exists_nontrivial: bool
    dimension: int
    rank_x: int
    rank_y: int
    gammas: tuple[np.ndarray, ...]


def _rank_and_null(mat: np.ndarray):
    """Rank with a relative singular-value threshold and an orthonormal left null space."""
    u, sv, _ = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(sv > RANK_TOL * sv[0])) if sv.size and sv[0] > 0 else 0
    return rank, u[:, rank:]


def icd_zero_space(p: MarginalPair) -> ZeroSpace:
    """Stimulus-independent correlation patterns ``gamma(x, y)`` that keep the marginals.

    These solve ``sum_x P(x|s) gamma(x,y) = 0`` and ``sum_y gamma(x,y) P(y|s) = 0``
    and exist exactly when both conditional matrices are rank deficient.
    """
    px = p.x_given_s().T  # [x, s]
    py = p.y_given_s().T  # [y, s]
    rk_x, null_x = _rank_and_null(px)
    rk_y, null_y = _rank_and_null(py)
    gammas = tuple(np.outer(u, v) for u in null_x.T for v in null_y.T)
    dim = (px.shape[0] - rk_x) * (py.shape[0] - rk_y)
    return ZeroSpace(dim > 0, dim, rk_x, rk_y, gammas)


def apply_gamma(p: MarginalPair, gamma: np.ndarray, scale: float) -> np.ndarray:
    """``Q(s,x,y) = Q0(s,x,y) (1 + scale * gamma(x,y))``."""
    q0 = shuffle_array(p)
    return q0 * (1.0 + scale * np.asarray(gamma, float)[None, :, :])


# ------------------------------------------------------- linearity of I_ci


@dataclass(frozen=True)
class LinearityReport:
    max_residual: float
    coefficients: np.ndarray
    expected: np.ndarray
    coefficient_error: float
    tangency_residual: float
    samples: int


def ici_value(d: CorrelationDomain, mass: np.ndarray) -> float:
    """``I_ci`` of a point of the domain."""
    q0 = d.q0.mass
    return information(mass) - information(q0) - conditional_divergence(mass, q0)


def expected_ici_coefficients(d: CorrelationDomain) -> np.ndarray:
    """``log[Q0(x,y0) Q0(x0,y) / (Q0(x0,y0) Q0(x,y))]`` for each basis vector."""
    m = d.q0.mass.sum(axis=0)
    return np.array([
        np.log(m[b.x2, b.y] * m[b.x, b.y2] / (m[b.x, b.y] * m[b.x2, b.y2])) for b in d.basis
    ])


def sample_domain(d: CorrelationDomain, n: int, rng: np.random.Generator, shrink: float = 0.98) -> np.ndarray:
    """Random coordinates of points of the domain."""
    if d.lower is not None:
        u = rng.random((n, d.dims))
        return d.lower + shrink * u * (d.upper - d.lower) + (1 - shrink) / 2 * (d.upper - d.lower)
    out = []
    q0 = d.q0.mass.reshape(-1)
    while len(out) < n:
        direction = rng.normal(size=d.dims)
        dq = d.matrix @ direction
        neg = dq < 0
        if not np.any(neg):
            continue
        reach = np.min(-q0[neg] / dq[neg])
        out.append(direction * reach * shrink * rng.random())
    return np.array(out)


def ici_linearity_check(d: CorrelationDomain, samples: int = 50, seed: int = 0) -> LinearityReport:
    """Fit ``I_ci`` by an affine function of the coordinates and compare with the expected slopes.

    The tangency residual compares the slopes of ``I_ci`` with the gradient of
    ``I`` at the shuffle point, so that ``I(Q0) + I_ci`` is tangent to ``I`` there.
    """
    if np.any(d.q0.mass <= 0):
        raise PreconditionError("needs a fully supported shuffle law")
    rng = np.random.default_rng(seed)
    ts = sample_domain(d, samples, rng)
    values = np.array([ici_value(d, embed_array(d, t)) for t in ts])
    design = np.column_stack([np.ones(len(ts)), ts])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    resid = float(np.max(np.abs(design @ coef - values)))
    expected = expected_ici_coefficients(d)
    grad0 = np.array([derivative_along_basis(d.q0.mass, b) for b in d.basis])
    return LinearityReport(
        max_residual=resid,
        coefficients=coef[1:],
        expected=expected,
        coefficient_error=float(np.max(np.abs(coef[1:] - expected))),
        tangency_residual=float(np.max(np.abs(grad0 - expected))),
        samples=samples,
    )


def second_derivative_along_basis(q, s: int) -> float:
    """``d^2 I / dt_s^2`` along the binary basis vector of slice ``s``.

    Equals ``sum_xy 1/Q(s,x,y) - sum_xy 1/Q(x,y)``.
    """
    m = _mass(q)
    if m.shape[1:] != (2, 2):
        raise PreconditionError("needs binary X and Y")
    if np.any(m[s] <= 0):
        raise PreconditionError("needs a positive slice")
    return float(np.sum(1.0 / m[s]) - np.sum(1.0 / m.sum(axis=0)))
