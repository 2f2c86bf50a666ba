"""Minimisation of I(S:X,Y) over the correlation domain and related extremal problems.

The default solver is a primal log-barrier Newton method on a chart of the
domain restricted to its support (cells where ``Q0 > 0``). Each centring
step solves a small dense Newton system with the exact Hessian

    H = B^T diag(1/Q) B - C^T diag(1/M) C,

where ``M`` is the (X,Y) marginal and ``C`` aggregates cells over ``S``.
At a barrier centre with weight ``mu`` the duality gap is at most
``n_cells * mu``. A Frank-Wolfe method with away steps is available as an
alternative solver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from .binomial import Binomial, alpha, beta
from .distributions import JointDistribution
from .domain import (
    CorrelationDomain,
    DomainCoords,
    coords,
    embed,
    embed_array,
    independence_flags,
)
from .errors import NonConvergence, PreconditionError

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 100_000
INTERIOR_MARGIN = 1e-7
INDEPENDENCE_TOL = 1e-10
_MU_START = 1e-3
_MU_FINAL = 1e-14
_MU_FACTOR = 0.1
_SNAP_LEVEL = 1e-10
# barrier iterates stop about mu / |gradient| short of a face, so corners are tried from further out
_SNAP_REACH = 1e-8


class Location(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    NON_UNIQUE = "non-unique-segment"


def information(mass: np.ndarray) -> float:
    """``I(S : X,Y)`` of a raw ``[s, x, y]`` array, in nats."""
    mass = np.asarray(mass, float)
    p_s = mass.sum(axis=(1, 2))
    m = mass.sum(axis=0)
    denom = p_s[:, None, None] * m[None, :, :]
    pos = mass > 0
    return max(float(np.sum(mass[pos] * np.log(mass[pos] / denom[pos]))), 0.0)


@dataclass(frozen=True)
class Certificate:
    """Sign, corner and uniqueness checks for a binary minimiser."""

    alpha0: float
    sign_pattern: tuple[int, ...]
    signs_ok: bool
    residuals: tuple[float, ...]
    corner: str | None
    corner_cell: tuple[int, int] | None
    labeling_ok: bool | None
    corner_margin: float | None
    x_independent: bool
    y_independent: bool
    numerically_unique: bool
    uniqueness_ok: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class MinimizerReport:
    q_star: JointDistribution
    t_star: DomainCoords
    i_star: float
    location: Location
    near_interior: bool
    first_order_residual: float
    iterations: int
    history: tuple[float, ...]
    method: str
    certificate: Certificate | None = None


@dataclass(frozen=True)
class ErrorReport:
    corners: tuple[tuple[float, ...], ...]
    labels: tuple[tuple[str, ...], ...]
    errors: tuple[float, ...]
    min_error: float
    argmin: tuple[tuple[str, ...], ...]
    method: str = "corners"


# ---------------------------------------------------------------- support chart


@dataclass
class _Chart:
    shape: tuple[int, int, int]
    cells: np.ndarray  # flat indices of supported cells
    q0: np.ndarray  # Q0 on supported cells
    basis: np.ndarray  # (n_cells, k)
    xy: np.ndarray  # (X,Y) index of each supported cell
    n_xy: int
    agg: np.ndarray = field(init=False)  # (n_xy, k): C = A B

    def __post_init__(self):
        a = np.zeros((self.n_xy, len(self.cells)))
        a[self.xy, np.arange(len(self.cells))] = 1.0
        self.agg = a @ self.basis

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    def q(self, t):
        return self.q0 + self.basis @ t

    def full(self, q):
        out = np.zeros(int(np.prod(self.shape)))
        out[self.cells] = q
        return out.reshape(self.shape)


def _support_chart(d: CorrelationDomain) -> _Chart:
    q0 = d.q0.mass
    n_s, n_x, n_y = q0.shape
    cells = np.flatnonzero(q0.reshape(-1) > 0)
    pos = {int(c): i for i, c in enumerate(cells)}
    cols = []
    for s in range(n_s):
        xs = np.flatnonzero(d.pair.p_sx.mass[s] > 0)
        ys = np.flatnonzero(d.pair.p_sy.mass[s] > 0)
        for x in xs[1:]:
            for y in ys[1:]:
                v = np.zeros(len(cells))
                for (a, b), sign in (((xs[0], ys[0]), 1), ((x, y), 1), ((x, ys[0]), -1), ((xs[0], y), -1)):
                    v[pos[int(np.ravel_multi_index((s, a, b), q0.shape))]] += sign
                cols.append(v)
    basis = np.stack(cols, axis=1) if cols else np.zeros((len(cells), 0))
    _, xi, yi = np.unravel_index(cells, q0.shape)
    return _Chart(q0.shape, cells, q0.reshape(-1)[cells], basis, xi * n_y + yi, n_x * n_y)


def _objective(chart: _Chart, q: np.ndarray, log_ps: np.ndarray) -> float:
    m = np.bincount(chart.xy, weights=q, minlength=chart.n_xy)
    pos = q > 0
    return float(np.sum(q[pos] * (np.log(q[pos]) - np.log(m[chart.xy][pos]) - log_ps[pos])))


def _grad_hess(chart: _Chart, q: np.ndarray):
    m = np.bincount(chart.xy, weights=q, minlength=chart.n_xy)
    g = np.log(q) - np.log(m[chart.xy])
    b = chart.basis
    grad = b.T @ g
    used = m > 0
    c = chart.agg[used]
    hess = b.T @ (b / q[:, None]) - c.T @ (c / m[used][:, None])
    return grad, hess


def _solve(hess: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        lower = np.linalg.cholesky(hess)
        return np.linalg.solve(lower.T, np.linalg.solve(lower, rhs))
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(hess, rhs, rcond=1e-14)[0]


def _max_step(q: np.ndarray, dq: np.ndarray) -> float:
    neg = dq < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-q[neg] / dq[neg]))


def _barrier_newton(chart: _Chart, log_ps: np.ndarray, max_iters: int):
    t = np.zeros(chart.k)
    mu = _MU_START
    iterations = 0
    history = []
    residual = np.inf
    while True:
        for _ in range(200):
            q = chart.q(t)
            grad, hess = _grad_hess(chart, q)
            bq = chart.basis / q[:, None]
            grad_phi = grad - mu * bq.sum(axis=0)
            hess_phi = hess + mu * (bq.T @ bq)
            step = -_solve(hess_phi, grad_phi)
            decrement = float(-grad_phi @ step)
            residual = float(np.max(np.abs(grad_phi))) if grad_phi.size else 0.0
            if decrement <= 1e-22:
                break
            iterations += 1
            if iterations > max_iters:
                raise NonConvergence(f"no convergence after {max_iters} Newton steps", best=t)
            dq = chart.basis @ step
            alpha_max = min(1.0, 0.99 * _max_step(q, dq))
            a = alpha_max
            if decrement > 1e-12:
                phi0 = _objective(chart, q, log_ps) - mu * np.sum(np.log(q))
                while a > 1e-12:
                    qn = q + a * dq
                    if np.all(qn > 0):
                        phin = _objective(chart, qn, log_ps) - mu * np.sum(np.log(qn))
                        if phin <= phi0 - 1e-4 * a * decrement:
                            break
                    a *= 0.5
            t = t + a * step
            if a * np.max(np.abs(step), initial=0.0) < 1e-17:
                break
        history.append(_objective(chart, chart.q(t), log_ps))
        if mu <= _MU_FINAL:
            break
        mu = max(mu * _MU_FACTOR, _MU_FINAL)
    return t, iterations, history, max(residual, mu * len(chart.cells))


def _lmo(chart: _Chart, d: CorrelationDomain, g: np.ndarray) -> np.ndarray:
    """Vertex of the domain minimising ``<g, Q>``, one transportation problem per stimulus."""
    out = np.zeros(len(chart.cells))
    s_idx = np.unravel_index(chart.cells, chart.shape)[0]
    _, xi, yi = np.unravel_index(chart.cells, chart.shape)
    for s in range(chart.shape[0]):
        sel = np.flatnonzero(s_idx == s)
        xs = np.unique(xi[sel])
        ys = np.unique(yi[sel])
        a_eq = []
        b_eq = []
        for x in xs:
            a_eq.append((xi[sel] == x).astype(float))
            b_eq.append(d.pair.p_sx.mass[s, x])
        for y in ys[1:]:
            a_eq.append((yi[sel] == y).astype(float))
            b_eq.append(d.pair.p_sy.mass[s, y])
        for method in ("highs-ds", "highs-ipm"):
            # dual simplex occasionally stalls on near-tied costs; interior point with crossover still ends on a vertex
            res = linprog(g[sel], A_eq=np.array(a_eq), b_eq=np.array(b_eq), bounds=(0, None), method=method)
            if res.x is not None:
                break
        else:
            raise NonConvergence(f"linear minimisation oracle failed: {res.message}")
        out[sel] = np.clip(res.x, 0.0, None)
    return out


def _frank_wolfe(chart: _Chart, d: CorrelationDomain, log_ps: np.ndarray, tol: float, max_iters: int):
    q = chart.q0.copy()
    atoms = {b"q0": q.copy()}
    weights = {b"q0": 1.0}
    history = [_objective(chart, q, log_ps)]
    gap = np.inf
    for it in range(1, max_iters + 1):
        m = np.bincount(chart.xy, weights=q, minlength=chart.n_xy)
        g = np.log(np.maximum(q, 1e-300)) - np.log(np.maximum(m[chart.xy], 1e-300))
        v = _lmo(chart, d, g)
        gap = float(g @ (q - v))
        if gap <= tol:
            return q, it - 1, history, gap
        away_key = max(weights, key=lambda k: float(g @ atoms[k]))
        a_vec = atoms[away_key]
        if gap >= float(g @ (a_vec - q)) or len(weights) == 1:
            direction = v - q
            gamma_max = 1.0
            mode = "fw"
        else:
            direction = q - a_vec
            w = weights[away_key]
            gamma_max = w / (1.0 - w)
            mode = "away"

        def along(gamma):
            return _objective(chart, np.clip(q + gamma * direction, 0.0, None), log_ps)

        if gamma_max <= 1e-12:
            # drop a negligible atom outright; a line search cannot resolve the change
            gamma = gamma_max
        else:
            res = minimize_scalar(along, bounds=(0.0, gamma_max), method="bounded", options={"xatol": 1e-14})
            gamma = float(res.x) if res.fun <= along(gamma_max) else gamma_max
        if mode == "fw":
            key = np.round(v, 15).tobytes()
            weights = {k: (1 - gamma) * w for k, w in weights.items()}
            atoms.setdefault(key, v)
            weights[key] = weights.get(key, 0.0) + gamma
        else:
            weights = {k: (1 + gamma) * w for k, w in weights.items()}
            weights[away_key] -= gamma
        weights = {k: w for k, w in weights.items() if w > 1e-13}
        q = np.clip(q + gamma * direction, 0.0, None)
        history.append(min(history[-1], _objective(chart, q, log_ps)))
    raise NonConvergence(f"Frank-Wolfe gap {gap:.3e} after {max_iters} iterations", best=q)


# ------------------------------------------------------------ public interface


def _corner_margin(d: CorrelationDomain, mass: np.ndarray, corner: str) -> float | None:
    """First-order margin at a uniform corner of the binary box.

    Moving inward by ``u_s`` in each slice changes ``I`` at first order by
    ``sum_s u_s (G_s + log(u_s / (P(s) U)))``; the minimum over the unit
    simplex of ``u`` is ``-log sum_s P(s) exp(-G_s)``.
    """
    p_s = d.p_s
    m = mass.sum(axis=0)
    if corner.startswith("lower"):
        sign = np.array([[1.0, -1.0], [-1.0, 1.0]])
    else:
        sign = np.array([[-1.0, 1.0], [1.0, -1.0]])
    zero_cell = _corner_cell(d, corner)
    if zero_cell is None:
        return None
    g_vals = []
    for s in range(mass.shape[0]):
        total = 0.0
        for x in range(2):
            for y in range(2):
                if (x, y) == zero_cell:
                    continue
                if mass[s, x, y] <= 0:
                    return None
                total += sign[x, y] * np.log(mass[s, x, y] / (p_s[s] * m[x, y]))
        g_vals.append(total)
    g_vals = np.array(g_vals)
    shift = g_vals.min()
    return float(shift - np.log(np.sum(p_s * np.exp(-(g_vals - shift)))))


def _corner_cell(d: CorrelationDomain, corner: str) -> tuple[int, int] | None:
    """The cell that vanishes in every slice at a corner of the box, if any."""
    q0 = d.q0.mass
    pairs = [((0, 0), (1, 1))] if corner == "lower" else [((0, 1), (1, 0))]
    for a, b in pairs:
        for cell, partner in ((a, b), (b, a)):
            if np.all(q0[:, cell[0], cell[1]] <= q0[:, partner[0], partner[1]]):
                return cell
    return None


def _snap_binary_corner(d: CorrelationDomain, t: np.ndarray):
    width = d.upper - d.lower
    if np.any(width <= 0):
        return None
    near_low = t - d.lower <= _SNAP_REACH
    near_up = d.upper - t <= _SNAP_REACH
    if np.all(near_low):
        return "lower", d.lower.copy()
    if np.all(near_up):
        return "upper", d.upper.copy()
    return None


def minimize_information(
    d: CorrelationDomain,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    method: str = "newton",
) -> MinimizerReport:
    """Minimise ``I(S : X,Y)`` over the domain, starting from the shuffle point."""
    chart = _support_chart(d)
    s_of_cell = np.unravel_index(chart.cells, chart.shape)[0]
    log_ps = np.log(d.p_s)[s_of_cell]
    if chart.k == 0:
        q = chart.q0
        iterations, history, residual = 0, [_objective(chart, q, log_ps)], 0.0
    elif method == "newton":
        t_red, iterations, history, residual = _barrier_newton(chart, log_ps, max_iters)
        q = chart.q(t_red)
    elif method == "frank-wolfe":
        q, iterations, history, residual = _frank_wolfe(chart, d, log_ps, tol, max_iters)
    else:
        raise ValueError(f"unknown method {method!r}")

    mass = chart.full(np.clip(q, 0.0, None))
    mass = mass / mass.sum()
    t = coords(d, mass).t
    i_star = information(mass)
    near_interior = False
    location = Location.INTERIOR

    x_ind, y_ind = independence_flags(d.pair, INDEPENDENCE_TOL)
    free = chart.k > 0
    min_cell = float(np.min(q)) if q.size else 1.0
    if x_ind and y_ind and free:
        location = Location.NON_UNIQUE
        # the shuffle point lies on the zero segment; report it as the canonical minimiser
        base = information(d.q0.mass)
        if base <= i_star + 1e-12:
            mass, t, i_star = d.q0.mass.copy(), np.zeros(d.dims), base
    elif free and min_cell < INTERIOR_MARGIN:
        location = Location.BOUNDARY
        near_interior = min_cell > _SNAP_LEVEL
        if d.is_binary and d.lower is not None:
            snapped = _snap_binary_corner(d, t)
            if snapped is not None:
                corner, t_corner = snapped
                corner_mass = embed_array(d, t_corner)
                corner_mass = np.clip(corner_mass, 0.0, None)
                value = information(corner_mass)
                if value <= i_star + 1e-12:
                    mass, t, i_star = corner_mass / corner_mass.sum(), t_corner, value
                    margin = _corner_margin(d, mass, corner)
                    if margin is not None:
                        residual = max(0.0, -margin)
    elif free and method == "newton":
        grad, _ = _grad_hess(chart, q)
        residual = float(np.max(np.abs(grad)))

    if history and i_star < history[-1]:
        history = list(history) + [i_star]
    q_star = JointDistribution.from_array(mass, ("S", "X", "Y"))
    return MinimizerReport(
        q_star=q_star,
        t_star=DomainCoords(t),
        i_star=i_star,
        location=location,
        near_interior=near_interior,
        first_order_residual=float(residual),
        iterations=int(iterations),
        history=tuple(float(h) for h in history),
        method=method,
    )


def hessian_at(d: CorrelationDomain, t) -> np.ndarray:
    """Hessian of ``I`` in the joint-scale chart at an interior point."""
    mass = embed_array(d, np.asarray(t, float)).reshape(-1)
    b = d.matrix
    m = mass.reshape(d.shape).sum(axis=0).reshape(-1)
    n_xy = m.size
    xy = np.tile(np.arange(n_xy), d.shape[0])
    a = np.zeros((n_xy, mass.size))
    a[xy, np.arange(mass.size)] = 1.0
    c = a @ b
    return b.T @ (b / mass[:, None]) - c.T @ (c / m[:, None])


def critical_condition_residual(q, d: CorrelationDomain) -> np.ndarray:
    """``beta_s(q) - alpha(q)`` for the binomial of every basis vector."""
    mass = q.mass if isinstance(q, JointDistribution) else np.asarray(q, float)
    out = []
    for b in d.basis:
        bn = Binomial.of_basis_vector(b)
        be = beta(mass, bn, b.s)
        al = alpha(mass, bn)
        out.append(be.value - al.value if (be.defined and al.defined) else np.nan)
    return np.array(out)


def classify_minimizer(d: CorrelationDomain, report: MinimizerReport) -> Certificate:
    """Verify sign, corner and uniqueness structure of a binary minimiser."""
    if not d.is_binary or d.lower is None:
        raise PreconditionError("classification needs binary X and Y")
    if np.any(d.q0.mass <= 0):
        raise PreconditionError("classification needs a fully supported shuffle point")
    violations = []
    a0 = alpha(d.q0.mass, Binomial.determinant()).value
    a0_sign = 0 if abs(a0) <= 1e-12 else int(np.sign(a0))
    t = report.t_star.t
    signs = tuple(0 if abs(v) <= 1e-10 else int(np.sign(v)) for v in t)
    signs_ok = all(s == a0_sign for s in signs)
    if not signs_ok:
        violations.append(f"sign pattern {signs} differs from sign of alpha0 = {a0_sign}")
    residuals = tuple(float(r) for r in critical_condition_residual(report.q_star, d))

    corner = corner_cell = labeling_ok = margin = None
    if report.location == Location.BOUNDARY:
        snapped = _snap_binary_corner(d, t)
        if snapped is None:
            corner = "mixed"
            violations.append("boundary minimiser is not a uniform corner")
        else:
            corner = snapped[0]
            corner_cell = _corner_cell(d, corner)
            if corner_cell is None:
                labeling_ok = False
                violations.append(f"{corner} corner has no common zero cell")
            else:
                x2, y2 = corner_cell
                x, y = 1 - x2, 1 - y2
                px = d.pair.x_given_s()
                py = d.pair.y_given_s()
                labeling_ok = bool(np.all(px[:, x] * py[:, y] >= px[:, x2] * py[:, y2] - 1e-15))
                if not labeling_ok:
                    violations.append("corner labelling inequality fails")
                margin = _corner_margin(d, report.q_star.mass, corner)

    x_ind, y_ind = independence_flags(d.pair, INDEPENDENCE_TOL)
    if report.location == Location.BOUNDARY:
        unique = margin is not None and margin > 1e-12
    else:
        try:
            h = hessian_at(d, t)
            eig = np.linalg.eigvalsh(h)
            unique = bool(eig[0] > 1e-10 * max(abs(eig[-1]), 1.0))
        except (FloatingPointError, ZeroDivisionError):
            unique = True
    uniqueness_ok = (not unique) == (x_ind and y_ind)
    if not uniqueness_ok:
        violations.append(
            f"numerical uniqueness {unique} but independence flags ({x_ind}, {y_ind})"
        )
    return Certificate(
        alpha0=float(a0),
        sign_pattern=signs,
        signs_ok=signs_ok,
        residuals=residuals,
        corner=corner,
        corner_cell=corner_cell,
        labeling_ok=labeling_ok,
        corner_margin=margin,
        x_independent=x_ind,
        y_independent=y_ind,
        numerically_unique=bool(unique),
        uniqueness_ok=uniqueness_ok,
        violations=tuple(violations),
    )


# ------------------------------------------------------- classification error


def classification_error(q) -> float:
    """Error of the MAP decoder of ``S`` from ``(X, Y)``: ``1 - sum_xy max_s Q``."""
    mass = q.mass if isinstance(q, JointDistribution) else np.asarray(q, float)
    if mass.shape[0] == 2:
        return float(np.sum(mass.min(axis=0)))
    return float(1.0 - np.sum(mass.max(axis=0)))


def minimize_classification_error(d: CorrelationDomain, grid: int = 101) -> ErrorReport:
    """Minimum MAP error over the binary box.

    With two equiprobable stimuli the minimum is attained at a corner, so
    only the four corners are evaluated; otherwise a grid search is used.
    """
    if not d.is_binary or d.lower is None:
        raise PreconditionError("needs binary X and Y")
    n_s = d.shape[0]
    if n_s == 2 and abs(d.p_s[0] - 0.5) <= 1e-12:
        labels, corners, errors = [], [], []
        for l1 in ("min", "max"):
            for l2 in ("min", "max"):
                t = np.array([
                    d.lower[0] if l1 == "min" else d.upper[0],
                    d.lower[1] if l2 == "min" else d.upper[1],
                ])
                labels.append((l1, l2))
                corners.append(tuple(float(v) for v in t))
                errors.append(classification_error(embed_array(d, t)))
        best = min(errors)
        argmin = tuple(lab for lab, e in zip(labels, errors) if e <= best + 1e-12)
        return ErrorReport(tuple(corners), tuple(labels), tuple(errors), best, argmin)
    warnings.warn("the corner search needs two equiprobable stimuli; using a grid search", stacklevel=2)
    axes = [np.linspace(lo, hi, grid) for lo, hi in zip(d.lower, d.upper)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n_s)
    errs = np.array([classification_error(embed_array(d, t)) for t in mesh])
    k = int(np.argmin(errs))
    return ErrorReport(
        (tuple(float(v) for v in mesh[k]),), (("grid",) * n_s,), (float(errs[k]),),
        float(errs[k]), (("grid",) * n_s,), method="grid",
    )


# ------------------------------------------------- one-dimensional determinant line


@dataclass(frozen=True)
class LineScan:
    """Minimum of ``I(X:Y)`` along ``P0 + t [[1,-1],[-1,1]]``."""

    lower: float
    upper: float
    det0: float
    critical: float
    det_in_interval: bool
    location: Location
    t_star: float
    i_star: float


def _mi2(p: np.ndarray) -> float:
    r = p.sum(axis=1)
    c = p.sum(axis=0)
    pos = p > 0
    return max(float(np.sum(p[pos] * np.log(p[pos] / np.outer(r, c)[pos]))), 0.0)


def determinant_line(p0) -> LineScan:
    """Scan ``I(X:Y)`` along the marginal-preserving line through a 2x2 law.

    The derivative ``log[(a+t)(d+t)/((b-t)(c-t))]`` vanishes exactly at
    ``t = -det P0``; the minimum is interior when that point lies strictly
    inside the feasible interval.
    """
    p0 = np.asarray(p0, float)
    a, b, c, dd = p0[0, 0], p0[0, 1], p0[1, 0], p0[1, 1]
    lower, upper = -min(a, dd), min(b, c)
    det0 = a * dd - b * c
    critical = -det0
    v = np.array([[1.0, -1.0], [-1.0, 1.0]])
    if lower < critical < upper:
        location, t_star = Location.INTERIOR, critical
    else:
        f_lo, f_hi = _mi2(p0 + lower * v), _mi2(p0 + upper * v)
        location, t_star = Location.BOUNDARY, (lower if f_lo <= f_hi else upper)
    return LineScan(
        lower=lower,
        upper=upper,
        det0=det0,
        critical=critical,
        det_in_interval=bool(lower < det0 < upper),
        location=location,
        t_star=float(t_star),
        i_star=_mi2(np.clip(p0 + t_star * v, 0.0, None)),
    )
