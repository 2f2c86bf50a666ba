"""Discriminant geometry of the all-binary model in corner coordinates.

A rank-one 2x2 law is written ``sigma(s, t)`` where ``s = P(x1)`` and
``t = P(y1)``. For two stimuli with equal priors and conditionals
``sigma(p)``, ``sigma(q)``, whether ``I(S:X,Y)`` has an interior minimiser
over the correlation domain depends only on the direction of ``q - p``.
Directions are handled projectively as angles in ``[0, pi)``.

Admissible directions are computed on the canonical chamber
``0 < s <= t <= 1/2`` and transported to any interior point by the
symmetries ``s -> 1-s``, ``t -> 1-t`` and ``s <-> t`` of the square.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import NotOnSegre, VertexDegenerate

PI = math.pi
_EPS = 1e-15


@dataclass(frozen=True)
class CornerPoint:
    s: float
    t: float

    def __post_init__(self):
        s, t = float(self.s), float(self.t)
        if not (0.0 <= s <= 1.0 and 0.0 <= t <= 1.0):
            raise ValueError(f"corner point ({s}, {t}) outside the unit square")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)

    @property
    def interior(self) -> bool:
        return 0.0 < self.s < 1.0 and 0.0 < self.t < 1.0


@dataclass(frozen=True)
class Hyperplane:
    """Homogeneous coefficients ``(a, b, c, d)`` of ``a q11 + b q12 + c q21 + d q22 = 0``."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not any((self.a, self.b, self.c, self.d)):
            raise ValueError("hyperplane coefficients are all zero")

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])

    def slope(self) -> float:
        """Slope of the trace on the corner square: ``-(b - d)/(c - d)``."""
        den = self.c - self.d
        if den == 0:
            return math.inf
        return -(self.b - self.d) / den


@dataclass(frozen=True)
class Interval:
    """Extended-real interval with explicit closure flags."""

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def __str__(self):
        fmt = lambda v: "inf" if v == math.inf else "-inf" if v == -math.inf else f"{v:.12g}"
        return f"{'[' if self.lo_closed else '('}{fmt(self.lo)}, {fmt(self.hi)}{']' if self.hi_closed else ')'}"


@dataclass(frozen=True)
class SlopeSet:
    """Admissible slopes ``dt/ds`` as sorted extended-real intervals.

    ``arcs`` holds the same set as open arcs of direction angles in
    ``[0, pi)``, possibly wrapping past ``pi``.
    """

    intervals: tuple[Interval, ...]
    arcs: tuple[tuple[float, float], ...]

    def contains_angle(self, theta: float) -> bool:
        theta = theta % PI
        return any(_in_arc(theta, a, b) for a, b in self.arcs)


def _check_interior(p: CornerPoint):
    if not p.interior:
        raise VertexDegenerate(f"corner point ({p.s}, {p.t}) is not strictly interior")


def _as_point(p) -> CornerPoint:
    return p if isinstance(p, CornerPoint) else CornerPoint(*p)


# ------------------------------------------------------------ Segre chart


def sigma(p) -> np.ndarray:
    """The rank-one law ``[[st, s(1-t)], [(1-s)t, (1-s)(1-t)]]``."""
    p = _as_point(p)
    s, t = p.s, p.t
    return np.array([[s * t, s * (1 - t)], [(1 - s) * t, (1 - s) * (1 - t)]])


def sigma_inverse(q, tol: float = 1e-10) -> CornerPoint:
    """Corner coordinates of a rank-one 2x2 law."""
    q = np.asarray(q, float)
    if q.shape != (2, 2) or np.any(q < 0) or abs(q.sum() - 1) > 1e-9:
        raise ValueError("expected a 2x2 probability table")
    if abs(q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0]) > tol:
        raise NotOnSegre(f"determinant {q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0]:.3e} is not zero")
    return tare(q)


def tare(q) -> CornerPoint:
    """Projection of a 2x2 law onto the rank-one surface along ``[[1,-1],[-1,1]]``.

    That direction preserves both marginals, so the image is the product of
    the marginals of ``q``.
    """
    q = np.asarray(q, float)
    s = float(q[0, 0] + q[0, 1])
    t = float(q[0, 0] + q[1, 0])
    return CornerPoint(min(max(s, 0.0), 1.0), min(max(t, 0.0), 1.0))


def line_length(p) -> float:
    """Length parameter ``min(s, t, 1-s, 1-t)`` of the fibre of the tare map through ``p``."""
    p = _as_point(p)
    return min(p.s, p.t, 1 - p.s, 1 - p.t)


# ------------------------------------------------------------ hyperplane system


def solve_hyperplanes(p, r: float) -> tuple[Hyperplane, ...]:
    """Hyperplanes ``n`` with ``n.V = 0``, ``n.p = 0`` and ``r a d = b c`` (``a = 1``).

    Their traces on the corner square are the lines through ``p`` along
    which the log cross-ratio of the mixture equals ``log r``.
    """
    p = _as_point(p)
    _check_interior(p)
    if r <= 0:
        raise ValueError("r must be positive")
    s, t = p.s, p.t
    out = []
    if abs(s - t) <= 1e-14:
        d = -s / (1 - s)
        disc = (1 + d) ** 2 - 4 * r * d
        root = math.sqrt(max(disc, 0.0))
        for b in ((1 + d + root) / 2, (1 + d - root) / 2):
            out.append(Hyperplane(1.0, b, 1 + d - b, d))
        return tuple(out)
    big_b = s * (1 - s) + t * (1 - t) + r * (s - t) ** 2
    disc = big_b**2 - 4 * s * t * (1 - s) * (1 - t)
    root = math.sqrt(max(disc, 0.0))
    for sign in (1.0, -1.0):
        d = (-big_b + sign * root) / (2 * (1 - s) * (1 - t))
        # b + c = 1 + d and s(1-t) b + (1-s) t c = -st - d(1-s)(1-t)
        mat = np.array([[1.0, 1.0], [s * (1 - t), (1 - s) * t]])
        rhs = np.array([1 + d, -s * t - d * (1 - s) * (1 - t)])
        b, c = np.linalg.solve(mat, rhs)
        out.append(Hyperplane(1.0, float(b), float(c), float(d)))
    return tuple(out)


def hyperplane_residuals(h: Hyperplane, p, r: float) -> np.ndarray:
    """Residuals of ``n.V = 0``, ``r a d - b c = 0`` and ``n.sigma(p) = 0``."""
    a, b, c, d = h.normal
    return np.array([a - b - c + d, r * a * d - b * c, h.normal @ sigma(p).reshape(-1)])


# ------------------------------------------------------------ slope sets


def _in_arc(theta: float, a: float, b: float) -> bool:
    """Open arc from ``a`` to ``b`` (``b`` may exceed ``pi``) on the circle ``R / pi``."""
    theta = theta % PI
    if b <= PI:
        return a < theta < b
    return theta > a or theta < b - PI


def _canonical_arcs(s: float, t: float) -> tuple[tuple[float, float], ...]:
    """Admissible direction arcs for ``0 < s <= t <= 1/2``.

    Slopes ``(t/s, inf] u [-inf, -(1-t)/s)`` around the vertical and
    ``(-t/(1-s), (1-t)/(1-s))`` around the horizontal.
    """
    vertical = (math.atan(t / s), PI - math.atan((1 - t) / s))
    horizontal = (PI - math.atan(t / (1 - s)), PI + math.atan((1 - t) / (1 - s)))
    return (vertical, horizontal)


def _chamber_map(s: float, t: float):
    """Symmetry ``g`` with ``g(s, t)`` canonical, as a list of elementary moves."""
    moves = []
    if s > 0.5:
        s, moves = 1 - s, moves + ["flip_s"]
    if t > 0.5:
        t, moves = 1 - t, moves + ["flip_t"]
    if s > t:
        s, t, moves = t, s, moves + ["swap"]
    return s, t, moves


def _move_angle(theta: float, move: str) -> float:
    if move in ("flip_s", "flip_t"):
        return (PI - theta) % PI
    return (PI / 2 - theta) % PI


def _move_arc(arc, move):
    a, b = arc
    width = b - a
    if move in ("flip_s", "flip_t"):
        start = (PI - b) % PI
    else:
        start = (PI / 2 - b) % PI
    return (start, start + width)


def _direction_arcs(p: CornerPoint) -> tuple[tuple[float, float], ...]:
    s, t, moves = _chamber_map(p.s, p.t)
    arcs = _canonical_arcs(s, t)
    for move in reversed(moves):
        arcs = tuple(_move_arc(a, move) for a in arcs)
    return arcs


def _angle_to_slope(theta: float) -> float:
    theta = theta % PI
    if abs(theta - PI / 2) < 1e-15:
        return math.inf
    return math.tan(theta)


def _arcs_to_intervals(arcs) -> tuple[Interval, ...]:
    """Express open direction arcs as sorted slope intervals on the extended line."""
    pieces = []
    for a, b in arcs:
        segments = []
        if b <= PI:
            segments.append((a, b))
        else:
            segments += [(a, PI), (0.0, b - PI)]
        for lo, hi in segments:
            # split at the vertical direction, slope +-inf
            if lo < PI / 2 < hi:
                pieces.append(Interval(_angle_to_slope(lo), math.inf, False, True))
                pieces.append(Interval(-math.inf, _angle_to_slope(hi), True, False))
            else:
                lo_s = _angle_to_slope(lo) if lo != PI else 0.0
                hi_s = _angle_to_slope(hi) if hi != PI else 0.0
                if lo == PI / 2:
                    lo_s = -math.inf
                if hi == PI / 2:
                    hi_s = math.inf
                pieces.append(Interval(lo_s, hi_s, False, False))
    pieces.sort(key=lambda iv: (iv.lo, iv.hi))
    merged = []
    for iv in pieces:
        if merged and merged[-1].hi == iv.lo and (iv.lo == 0.0 or not math.isfinite(iv.lo)):
            prev = merged.pop()
            iv = Interval(prev.lo, iv.hi, prev.lo_closed, iv.hi_closed)
        merged.append(iv)
    return tuple(merged)


def slope_range(p) -> SlopeSet:
    """Slopes of lines through ``p`` along which a partner ``q`` gives an interior minimiser."""
    p = _as_point(p)
    _check_interior(p)
    arcs = _direction_arcs(p)
    return SlopeSet(_arcs_to_intervals(arcs), arcs)


def direction_angle(p, q) -> float:
    p, q = _as_point(p), _as_point(q)
    return math.atan2(q.t - p.t, q.s - p.s) % PI


def endpoint_distance(p, q) -> float:
    """Angular distance from the direction ``q - p`` to the nearest arc endpoint."""
    theta = direction_angle(p, q)
    best = math.inf
    for a, b in _direction_arcs(_as_point(p)):
        for e in (a % PI, b % PI):
            diff = abs(theta - e) % PI
            best = min(best, diff, PI - diff)
    return best


def has_interior_minimum(p, q) -> bool:
    """Whether two equiprobable stimuli with conditionals ``sigma(p)``, ``sigma(q)`` admit an interior minimiser."""
    p, q = _as_point(p), _as_point(q)
    _check_interior(p)
    _check_interior(q)
    if p.s == q.s and p.t == q.t:
        return True
    theta = direction_angle(p, q)
    return any(_in_arc(theta, a, b) for a, b in _direction_arcs(p))


def has_interior_minimum_batch(s, t, x, y) -> np.ndarray:
    """Vectorised :func:`has_interior_minimum` for arrays of ``p = (s,t)`` and ``q = (x,y)``."""
    s, t, x, y = (np.asarray(v, float) for v in (s, t, x, y))
    theta = np.mod(np.arctan2(y - t, x - s), PI)
    cs, ct = s.copy(), t.copy()
    flip_s = cs > 0.5
    cs = np.where(flip_s, 1 - cs, cs)
    theta = np.where(flip_s, np.mod(PI - theta, PI), theta)
    flip_t = ct > 0.5
    ct = np.where(flip_t, 1 - ct, ct)
    theta = np.where(flip_t, np.mod(PI - theta, PI), theta)
    swap = cs > ct
    cs, ct = np.where(swap, ct, cs), np.where(swap, cs, ct)
    theta = np.where(swap, np.mod(PI / 2 - theta, PI), theta)
    v_lo = np.arctan(ct / cs)
    v_hi = PI - np.arctan((1 - ct) / cs)
    h_lo = PI - np.arctan(ct / (1 - cs))
    h_hi = np.arctan((1 - ct) / (1 - cs))
    inside = ((theta > v_lo) & (theta < v_hi)) | (theta > h_lo) | (theta < h_hi)
    same = (s == x) & (t == y)
    return inside | same


# ------------------------------------------------------------ areas and volumes


def _canonical_area(s: float, t: float) -> float:
    return 0.5 + 0.5 * s * (t / (1 - t) + s / (1 - s) + (1 - t) / t - 1)


def region_area(p) -> float:
    """Area of the set of partners ``q`` giving an interior minimiser with ``p``."""
    p = _as_point(p)
    _check_interior(p)
    s, t, _ = _chamber_map(p.s, p.t)
    return _canonical_area(s, t)


def _map_point_back(pt, moves):
    x, y = pt
    for move in reversed(moves):
        if move == "flip_s":
            x = 1 - x
        elif move == "flip_t":
            y = 1 - y
        else:
            x, y = y, x
    return (x, y)


def region_polygons(p) -> tuple[tuple[tuple[float, float], ...], ...]:
    """The four triangles with apex ``p`` whose union is the interior-minimum region."""
    p = _as_point(p)
    _check_interior(p)
    s, t, moves = _chamber_map(p.s, p.t)
    apex = (s, t)
    tris = (
        (apex, (0.0, 1.0), (s / t, 1.0)),
        (apex, (0.0, 0.0), (s / (1 - t), 0.0)),
        (apex, (1.0, 0.0), (1.0, 1.0)),
        (apex, (0.0, t / (1 - s)), (0.0, (t - s) / (1 - s))),
    )
    return tuple(tuple(_map_point_back(v, moves) for v in tri) for tri in tris)


def boundary_points(p) -> tuple[tuple[float, float], ...]:
    """Where the extremal lines through ``p`` meet the edges of the square."""
    p = _as_point(p)
    _check_interior(p)
    s, t, moves = _chamber_map(p.s, p.t)
    pts = ((0.0, t / (1 - s)), (s / t, 1.0), (s / (1 - t), 0.0), (0.0, (t - s) / (1 - s)))
    return tuple(_map_point_back(v, moves) for v in pts)


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    samples: int
    method: str
    seed: int | None = None
    workers: int = 1


def interior_fraction_exact(rtol: float = 1e-8) -> VolumeEstimate:
    """``8 * integral of the canonical area over 0 <= s <= t <= 1/2``."""
    value, err = integrate.dblquad(
        lambda s, t: _canonical_area(s, t) if s > 0 else 0.5,
        0.0,
        0.5,
        lambda t: 0.0,
        lambda t: t,
        epsabs=1e-13,
        epsrel=rtol,
    )
    return VolumeEstimate(8 * value, 8 * err, 0, "exact-quadrature")


def _split(n: int, workers: int) -> list[int]:
    base, extra = divmod(n, workers)
    return [base + (1 if i < extra else 0) for i in range(workers)]


def _mc_corner_chunk(seed_seq: np.random.SeedSequence, n: int, chunk: int = 1 << 18) -> int:
    rng = np.random.default_rng(seed_seq)
    hits = 0
    left = n
    while left > 0:
        m = min(chunk, left)
        u = rng.random((4, m))
        hits += int(np.count_nonzero(has_interior_minimum_batch(u[0], u[1], u[2], u[3])))
        left -= m
    return hits


def _dirichlet_tare(rng, m):
    q = rng.dirichlet(np.ones(4), size=m)
    return q[:, 0] + q[:, 1], q[:, 0] + q[:, 2]


def _mc_simplex_chunk(seed_seq: np.random.SeedSequence, n: int, chunk: int = 1 << 18) -> int:
    rng = np.random.default_rng(seed_seq)
    hits = 0
    left = n
    while left > 0:
        m = min(chunk, left)
        s, t = _dirichlet_tare(rng, m)
        x, y = _dirichlet_tare(rng, m)
        ok = (s > 0) & (s < 1) & (t > 0) & (t < 1) & (x > 0) & (x < 1) & (y > 0) & (y < 1)
        hits += int(np.count_nonzero(has_interior_minimum_batch(s[ok], t[ok], x[ok], y[ok])))
        left -= m
    return hits


def interior_fraction_mc(
    samples: int, seed: int, workers: int = 1, measure: str = "corner"
) -> VolumeEstimate:
    """Monte Carlo fraction of stimulus pairs with an interior minimiser.

    ``measure="corner"`` draws both corner points uniformly from the square.
    ``measure="simplex"`` draws each conditional uniformly from the 2x2
    simplex, which weights corner points by the fibre length. Worker ``i``
    uses the ``i``-th child of ``SeedSequence(seed)``, so the result is
    reproducible for a fixed ``(seed, workers)``.
    """
    if samples <= 0:
        raise ValueError("samples must be positive")
    workers = max(1, int(workers))
    children = np.random.SeedSequence(seed).spawn(workers)
    sizes = _split(samples, workers)
    chunk_fn = {"corner": _mc_corner_chunk, "simplex": _mc_simplex_chunk}[measure]
    if workers == 1:
        hits = [chunk_fn(children[0], sizes[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = list(pool.map(chunk_fn, children, sizes))
    frac = sum(hits) / samples
    return VolumeEstimate(
        frac, math.sqrt(frac * (1 - frac) / samples), samples, f"monte-carlo-{measure}", seed, workers
    )


def interior_fraction(method: str = "exact-quadrature", seed: int | None = None, samples: int = 10**6, workers: int = 1) -> VolumeEstimate:
    if method == "exact-quadrature":
        return interior_fraction_exact()
    if method == "monte-carlo":
        if seed is None:
            raise ValueError("Monte Carlo needs a seed")
        return interior_fraction_mc(samples, seed, workers)
    raise ValueError(f"unknown method {method!r}")


# ------------------------------------------------------------ pushforward


def _triangle_rule(n: int):
    """Points and weights on the triangle ``0 <= v <= u <= 1`` via a collapsed Gauss rule."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    u, v = np.meshgrid(x, x, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    return u.ravel(), (u * v).ravel(), (wu * wv * u).ravel()


def pushforward_integral(f: Callable[[np.ndarray], float], grid: int = 40) -> float:
    """``integral of f(sigma(s,t)) * line_length(s,t)`` over the unit square.

    ``f`` is called on 2x2 arrays and must be constant along the fibres of
    the tare map. The square is cut into the eight triangles on which the
    line length is linear, each handled by a collapsed Gauss-Legendre rule.
    """
    u, v, w = _triangle_rule(grid)
    # canonical triangle 0 <= s <= t <= 1/2 is (s, t) = (v/2, u/2) up to the factor 1/4
    base_s, base_t = v / 2, u / 2
    weights = w / 4
    total = 0.0
    for flip_s in (False, True):
        for flip_t in (False, True):
            for swap in (False, True):
                s, t = base_s, base_t
                if swap:
                    s, t = t, s
                if flip_t:
                    t = 1 - t
                if flip_s:
                    s = 1 - s
                for si, ti, wi in zip(s, t, weights):
                    p = CornerPoint(si, ti)
                    total += wi * f(sigma(p)) * line_length(p)
    return float(total)


# ------------------------------------------------------------ signs and chambers


def signal_sign_corner(p, q) -> int:
    """Sign of ``(x - s)(y - t)`` for ``p = (s,t)``, ``q = (x,y)``."""
    p, q = _as_point(p), _as_point(q)
    v = (q.s - p.s) * (q.t - p.t)
    if abs(v) <= 1e-15:
        return 0
    return 1 if v > 0 else -1


def _det(q) -> float:
    q = np.asarray(q, float)
    return float(q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0])


def _sign(v: float, tol: float = 1e-14) -> int:
    return 0 if abs(v) <= tol else (1 if v > 0 else -1)


@dataclass(frozen=True)
class ChamberReport:
    point_signs: tuple[int, ...]
    midpoint_signs: tuple[tuple[int, int, int], ...]
    mixture_sign: int | None
    min_det: float
    max_det: float
    same_chamber: bool
    verdict: str


def _simplex_grid(n: int, k: int):
    if n == 1:
        yield (1.0,)
        return
    def rec(prefix, left, slots):
        if slots == 1:
            yield prefix + (left,)
            return
        for i in range(left + 1):
            yield from rec(prefix + (i,), left - i, slots - 1)
    for combo in rec((), k, n):
        yield tuple(c / k for c in combo)


def chamber_test(config: Sequence, weights: Sequence[float] | None = None, resolution: int = 60) -> ChamberReport:
    """Determinant signs over the convex hull of a configuration of 2x2 laws.

    The hull is sampled on a barycentric grid of the given resolution; the
    configuration lies in one chamber when all sampled determinants share a
    sign (zeros allowed).
    """
    mats = [np.asarray(q, float) for q in config]
    if not mats:
        raise ValueError("empty configuration")
    point_signs = tuple(_sign(_det(q)) for q in mats)
    mids = []
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            mids.append((i, j, _sign(_det((mats[i] + mats[j]) / 2))))
    mixture = None
    if weights is not None:
        w = np.asarray(weights, float)
        mixture = _sign(_det(sum(wi * q for wi, q in zip(w / w.sum(), mats))))
    dets = [
        _det(sum(l * q for l, q in zip(lam, mats)))
        for lam in _simplex_grid(len(mats), resolution)
    ]
    lo, hi = min(dets), max(dets)
    pos = lo >= -1e-14
    neg = hi <= 1e-14
    if pos and neg:
        verdict = "degenerate"
    elif pos:
        verdict = "positive chamber"
    elif neg:
        verdict = "negative chamber"
    else:
        verdict = "both chambers"
    return ChamberReport(point_signs, tuple(mids), mixture, lo, hi, pos or neg, verdict)
