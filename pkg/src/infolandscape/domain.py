"""The correlation domain: joint laws of (S, X, Y) with fixed (S,X) and (S,Y) marginals.

Arrays are indexed ``[s, x, y]``. Points of the domain are written
``Q = Q0 + sum_k t_k V_k`` with joint-scale coordinates ``t``; the
conditional-scale chart ``g_k = t_k / P(s_k)`` is available through
:func:`to_conditional_scale` and :func:`from_conditional_scale`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .distributions import JointDistribution, StateSpace, TangentVector
from .errors import (
    InconsistentMarginals,
    NotInDomain,
    OutOfDomain,
    ZeroProbabilityOnDirection,
)

MARGINAL_TOL = 1e-10
MEMBERSHIP_TOL = 1e-9
_CLIP = 1e-15


@dataclass(frozen=True)
class MarginalPair:
    """Pairwise marginals ``P(s, x)`` and ``P(s, y)`` sharing ``P(s)``."""

    p_sx: JointDistribution
    p_sy: JointDistribution

    def __post_init__(self):
        if self.p_sx.mass.ndim != 2 or self.p_sy.mass.ndim != 2:
            raise InconsistentMarginals("marginals must be two-dimensional tables")
        a = self.p_sx.mass.sum(axis=1)
        b = self.p_sy.mass.sum(axis=1)
        if a.shape != b.shape or np.max(np.abs(a - b)) > MARGINAL_TOL:
            raise InconsistentMarginals("stimulus marginals of P(s,x) and P(s,y) differ")

    @classmethod
    def from_arrays(cls, p_sx, p_sy) -> "MarginalPair":
        return cls(
            JointDistribution.from_array(p_sx, ("S", "X")),
            JointDistribution.from_array(p_sy, ("S", "Y")),
        )

    @classmethod
    def from_joint(cls, q: JointDistribution | np.ndarray) -> "MarginalPair":
        mass = q.mass if isinstance(q, JointDistribution) else np.asarray(q, float)
        return cls.from_arrays(mass.sum(axis=2), mass.sum(axis=1))

    @classmethod
    def from_conditionals(cls, p_s, px_given_s, py_given_s) -> "MarginalPair":
        """Build from ``P(s)`` and row-stochastic ``P(x|s)``, ``P(y|s)``."""
        p_s = np.asarray(p_s, float)
        px = np.asarray(px_given_s, float)
        py = np.asarray(py_given_s, float)
        return cls.from_arrays(p_s[:, None] * px, p_s[:, None] * py)

    @property
    def p_s(self) -> np.ndarray:
        return self.p_sx.mass.sum(axis=1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.p_sx.shape[0], self.p_sx.shape[1], self.p_sy.shape[1])

    def x_given_s(self) -> np.ndarray:
        return self.p_sx.mass / self.p_s[:, None]

    def y_given_s(self) -> np.ndarray:
        return self.p_sy.mass / self.p_s[:, None]


@dataclass(frozen=True)
class KernelBasisVector:
    """Direction ``+1`` at (s,x,y),(s,x',y') and ``-1`` at (s,x',y),(s,x,y')."""

    s: int
    x: int
    x2: int
    y: int
    y2: int

    def __post_init__(self):
        if self.x == self.x2 or self.y == self.y2:
            raise ValueError("kernel basis vectors need x != x' and y != y'")

    def array(self, shape) -> np.ndarray:
        v = np.zeros(shape)
        v[self.s, self.x, self.y] += 1.0
        v[self.s, self.x2, self.y2] += 1.0
        v[self.s, self.x2, self.y] -= 1.0
        v[self.s, self.x, self.y2] -= 1.0
        return v

    def tangent(self, space: StateSpace) -> TangentVector:
        return TangentVector(space, self.array(space.shape))


@dataclass(frozen=True)
class DomainCoords:
    """Joint-scale coordinates of a point of the domain."""

    t: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        t.setflags(write=False)
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class CorrelationDomain:
    """The polytope of joint laws sharing the marginals in ``pair``.

    ``states`` lists the stimulus indices of the original input that survive
    after dropping zero-probability stimuli. ``lower``/``upper`` hold the box
    bounds when both responses are binary, and are ``None`` otherwise.
    """

    pair: MarginalPair
    q0: JointDistribution
    basis: tuple[KernelBasisVector, ...]
    x0: int
    y0: int
    states: tuple[int, ...]
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    matrix: np.ndarray = field(repr=False, default=None)

    @property
    def dims(self) -> int:
        return len(self.basis)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.q0.shape

    @property
    def is_binary(self) -> bool:
        return self.shape[1] == 2 and self.shape[2] == 2

    @property
    def p_s(self) -> np.ndarray:
        return self.pair.p_s


def _drop_null_states(p: MarginalPair) -> tuple[MarginalPair, tuple[int, ...]]:
    p_s = p.p_s
    keep = tuple(int(i) for i in np.flatnonzero(p_s > 0))
    if len(keep) == len(p_s):
        return p, keep
    dropped = [i for i in range(len(p_s)) if i not in keep]
    warnings.warn(f"dropping stimulus states with zero probability: {dropped}", stacklevel=3)
    if len(keep) < 2:
        raise InconsistentMarginals("fewer than two stimulus states have positive mass")
    sx = p.p_sx.mass[list(keep)]
    sy = p.p_sy.mass[list(keep)]
    return MarginalPair.from_arrays(sx / sx.sum(), sy / sy.sum()), keep


def shuffle_array(p: MarginalPair) -> np.ndarray:
    p_s = p.p_s
    with np.errstate(divide="ignore", invalid="ignore"):
        q = p.p_sx.mass[:, :, None] * p.p_sy.mass[:, None, :] / p_s[:, None, None]
    return np.where(p_s[:, None, None] > 0, q, 0.0)


def shuffle_distribution(p: MarginalPair) -> JointDistribution:
    """``Q0(s,x,y) = P(s) P(x|s) P(y|s)``, after dropping null stimuli."""
    p, _ = _drop_null_states(p)
    q = shuffle_array(p)
    return JointDistribution.from_array(q / q.sum(), ("S", "X", "Y"))


def build_domain(p: MarginalPair, x0: int = 0, y0: int = 0) -> CorrelationDomain:
    """Shuffle point, kernel basis anchored at ``(x0, y0)`` and box bounds."""
    p, keep = _drop_null_states(p)
    q0 = shuffle_distribution(p)
    n_s, n_x, n_y = q0.shape
    basis = []
    for s in range(n_s):
        for x in range(n_x):
            if x == x0:
                continue
            for y in range(n_y):
                if y == y0:
                    continue
                basis.append(KernelBasisVector(s, x0, x, y0, y))
    matrix = np.stack([b.array(q0.shape).reshape(-1) for b in basis], axis=1)
    lower = upper = None
    if n_x == 2 and n_y == 2 and (x0, y0) == (0, 0):
        m = q0.mass
        lower = -np.minimum(m[:, 0, 0], m[:, 1, 1])
        upper = np.minimum(m[:, 0, 1], m[:, 1, 0])
        lower.setflags(write=False)
        upper.setflags(write=False)
    matrix.setflags(write=False)
    return CorrelationDomain(p, q0, tuple(basis), x0, y0, keep, lower, upper, matrix)


def binary_domain(p_s, px1_given_s, py1_given_s) -> CorrelationDomain:
    """Domain for binary responses from ``P(x1|s)`` and ``P(y1|s)``."""
    px = np.asarray(px1_given_s, float)
    py = np.asarray(py1_given_s, float)
    pair = MarginalPair.from_conditionals(
        p_s, np.stack([px, 1 - px], axis=1), np.stack([py, 1 - py], axis=1)
    )
    return build_domain(pair)


def embed_array(d: CorrelationDomain, t) -> np.ndarray:
    t = np.asarray(t, dtype=float).reshape(-1)
    if t.shape != (d.dims,):
        raise ValueError(f"expected {d.dims} coordinates, got {t.shape}")
    q = d.q0.mass.reshape(-1) + d.matrix @ t
    return q.reshape(d.shape)


def embed(d: CorrelationDomain, t) -> JointDistribution:
    """The point ``Q0 + sum_k t_k V_k``; raises :class:`OutOfDomain` if infeasible."""
    if isinstance(t, DomainCoords):
        t = t.t
    t = np.asarray(t, dtype=float).reshape(-1)
    if d.lower is not None:
        span = np.maximum(d.upper - d.lower, 1.0)
        bad = np.flatnonzero((t < d.lower - _CLIP * span) | (t > d.upper + _CLIP * span))
        if bad.size:
            k = int(bad[0])
            raise OutOfDomain(
                f"coordinate {k} (s={d.basis[k].s}) = {t[k]!r} outside "
                f"[{d.lower[k]!r}, {d.upper[k]!r}]"
            )
    q = embed_array(d, t)
    low = q.min()
    if low < -_CLIP:
        s, x, y = np.unravel_index(int(np.argmin(q)), q.shape)
        raise OutOfDomain(f"negative mass {low:.3e} at state (s={s}, x={x}, y={y})")
    q = np.clip(q, 0.0, None)
    return JointDistribution.from_array(q / q.sum(), ("S", "X", "Y"))


def restrict_to_domain(d: CorrelationDomain, q) -> np.ndarray:
    """Mass of ``q`` on the stimulus states kept by the domain."""
    mass = q.mass if isinstance(q, JointDistribution) else np.asarray(q, float)
    if mass.shape == d.shape:
        return mass
    if mass.ndim == 3 and mass.shape[1:] == d.shape[1:]:
        dropped = [i for i in range(mass.shape[0]) if i not in d.states]
        if dropped and np.any(mass[dropped] > 0):
            raise NotInDomain("q charges stimulus states the domain excludes")
        return mass[list(d.states)]
    raise NotInDomain(f"shape {mass.shape} incompatible with domain {d.shape}")


def coords(d: CorrelationDomain, q) -> DomainCoords:
    """Inverse of :func:`embed` for points of the domain."""
    mass = restrict_to_domain(d, q)
    if np.max(np.abs(mass.sum(axis=2) - d.pair.p_sx.mass)) > MEMBERSHIP_TOL or np.max(
        np.abs(mass.sum(axis=1) - d.pair.p_sy.mass)
    ) > MEMBERSHIP_TOL:
        raise NotInDomain("q does not have the (S,X) and (S,Y) marginals of the domain")
    diff = mass - d.q0.mass
    t = np.array([diff[b.s, b.x2, b.y2] for b in d.basis])
    if np.max(np.abs(embed_array(d, t) - mass)) > MEMBERSHIP_TOL:
        raise NotInDomain("q is not reproduced by the kernel chart")
    return DomainCoords(t)


def to_conditional_scale(d: CorrelationDomain, t) -> np.ndarray:
    """Joint-scale ``t`` to conditional-scale ``g = t / P(s)``."""
    t = np.asarray(t.t if isinstance(t, DomainCoords) else t, float)
    return t / np.array([d.p_s[b.s] for b in d.basis])


def from_conditional_scale(d: CorrelationDomain, g) -> DomainCoords:
    """Conditional-scale ``g`` to joint-scale ``t = P(s) g``."""
    g = np.asarray(g, float)
    return DomainCoords(g * np.array([d.p_s[b.s] for b in d.basis]))


def derivative_along_basis(q: JointDistribution | np.ndarray, b: KernelBasisVector) -> float:
    """Directional derivative of ``I(S:X,Y)`` at ``q`` along ``b``.

    Equals the conditional log cross-ratio in slice ``b.s`` minus the log
    cross-ratio of the (X,Y) marginal.
    """
    mass = q.mass if isinstance(q, JointDistribution) else np.asarray(q, float)
    s, x, x2, y, y2 = b.s, b.x, b.x2, b.y, b.y2
    joint = np.array([mass[s, x, y], mass[s, x2, y2], mass[s, x, y2], mass[s, x2, y]])
    m = mass.sum(axis=0)
    marg = np.array([m[x, y2], m[x2, y], m[x, y], m[x2, y2]])
    if np.any(joint <= 0) or np.any(marg <= 0):
        raise ZeroProbabilityOnDirection("derivative needs positive mass on the 8 states involved")
    lj = np.log(joint)
    lm = np.log(marg)
    return float(lj[0] + lj[1] - lj[2] - lj[3] + lm[0] + lm[1] - lm[2] - lm[3])


def independence_flags(p: MarginalPair, tol: float = 1e-10) -> tuple[bool, bool]:
    """Whether X is independent of S and whether Y is independent of S."""
    px = p.x_given_s()
    py = p.y_given_s()
    return (
        bool(np.max(np.abs(px - px.mean(axis=0))) <= tol),
        bool(np.max(np.abs(py - py.mean(axis=0))) <= tol),
    )
