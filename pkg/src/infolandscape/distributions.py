"""Finite joint distributions and their information functionals.

All quantities are in nats. ``0 log 0`` is taken as 0; derivatives refuse
directions that touch zero-probability states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InvalidDistribution,
    SupportMismatch,
    UnknownAxis,
    ZeroProbabilityEvent,
    ZeroProbabilityOnDirection,
)

NORMALIZATION_TOL = 1e-12
LN2 = float(np.log(2.0))


def to_bits(nats: float) -> float:
    """Convert an information value from nats to bits."""
    return float(nats) / LN2


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StateSpace:
    """Ordered product of named finite axes."""

    axes: tuple[tuple[str, int], ...]

    def __post_init__(self):
        axes = tuple((str(n), int(k)) for n, k in self.axes)
        names = [n for n, _ in axes]
        if not axes:
            raise ValueError("a state space needs at least one axis")
        if len(set(names)) != len(names):
            raise ValueError(f"axis names must be unique, got {names}")
        for name, card in axes:
            if card < 2:
                raise ValueError(f"axis {name!r} has cardinality {card} < 2")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_shape(cls, shape: Sequence[int], names: Sequence[str] | None = None):
        if names is None:
            names = ("S", "X", "Y", "Z", "W")[: len(shape)] if len(shape) <= 5 else [
                f"A{i}" for i in range(len(shape))
            ]
        return cls(tuple(zip(names, shape)))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(k for _, k in self.axes)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownAxis(name) from None

    def sub(self, names: Iterable[str]) -> "StateSpace":
        keep = set(names)
        return StateSpace(tuple(a for a in self.axes if a[0] in keep))


@dataclass(frozen=True)
class JointDistribution:
    """Probability mass on a :class:`StateSpace`, stored densely."""

    space: StateSpace
    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen(self.mass)
        if mass.shape != self.space.shape:
            raise InvalidDistribution(
                f"mass shape {mass.shape} does not match space {self.space.shape}"
            )
        if not np.all(np.isfinite(mass)):
            raise InvalidDistribution("mass has non-finite entries")
        if np.any(mass < 0):
            raise InvalidDistribution(f"negative mass {mass.min():.3e}")
        total = mass.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise InvalidDistribution(f"mass sums to {total!r}, not 1")
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_array(cls, mass, names: Sequence[str] | None = None) -> "JointDistribution":
        mass = np.asarray(mass, dtype=float)
        return cls(StateSpace.from_shape(mass.shape, names), mass)

    @property
    def names(self) -> tuple[str, ...]:
        return self.space.names

    @property
    def shape(self) -> tuple[int, ...]:
        return self.space.shape


@dataclass(frozen=True)
class TangentVector:
    """Direction tangent to the probability simplex (entries sum to zero)."""

    space: StateSpace
    delta: np.ndarray

    def __post_init__(self):
        delta = _frozen(self.delta)
        if delta.shape != self.space.shape:
            raise ValueError(f"delta shape {delta.shape} does not match space")
        if not np.all(np.isfinite(delta)):
            raise ValueError("delta has non-finite entries")
        if abs(delta.sum()) > NORMALIZATION_TOL * max(1.0, np.abs(delta).sum()):
            raise ValueError(f"tangent vector sums to {delta.sum()!r}, not 0")
        object.__setattr__(self, "delta", delta)


def _axis_positions(space: StateSpace, names: Iterable[str]) -> list[int]:
    return [space.index(n) for n in names]


def marginal_array(q: JointDistribution, keep: Iterable[str]) -> np.ndarray:
    """Marginal mass over ``keep`` as a raw array, axes in the order of ``q``."""
    keep_idx = set(_axis_positions(q.space, keep))
    if not keep_idx:
        raise ValueError("keep-axes must be non-empty")
    drop = tuple(i for i in range(q.mass.ndim) if i not in keep_idx)
    return q.mass.sum(axis=drop) if drop else np.array(q.mass)


def marginalize(q: JointDistribution, keep: Iterable[str]) -> JointDistribution:
    """Sum out every axis not in ``keep``; kept axes retain their order."""
    keep = list(keep)
    arr = marginal_array(q, keep)
    arr = arr / arr.sum()
    return JointDistribution(q.space.sub(keep), arr)


def condition(q: JointDistribution, axis: str, state: int) -> JointDistribution:
    """Distribution of the remaining axes given ``axis == state``."""
    pos = q.space.index(axis)
    if not 0 <= state < q.shape[pos]:
        raise IndexError(f"state {state} out of range for axis {axis!r}")
    if q.mass.ndim == 1:
        raise ValueError("cannot condition a single-axis distribution")
    slab = np.take(q.mass, state, axis=pos)
    total = slab.sum()
    if total <= 0:
        raise ZeroProbabilityEvent(f"P({axis}={state}) = 0")
    rest = q.space.sub(n for n in q.names if n != axis)
    return JointDistribution(rest, slab / total)


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


def entropy_array(p) -> float:
    """Shannon entropy of a raw nonnegative array (not renormalised)."""
    return float(-_xlogx(p).sum())


def entropy(q: JointDistribution) -> float:
    """Shannon entropy in nats."""
    return max(entropy_array(q.mass), 0.0)


def _check_partition(q: JointDistribution, a: Sequence[str], b: Sequence[str]):
    a, b = list(a), list(b)
    if not a or not b:
        raise ValueError("both axis groups must be non-empty")
    if set(a) & set(b):
        raise ValueError("axis groups must be disjoint")
    if set(a) | set(b) != set(q.names) or len(a) + len(b) != len(q.names):
        raise ValueError("axis groups must cover all axes of q")
    _axis_positions(q.space, a + b)
    return a, b


def mutual_information(q: JointDistribution, a: Sequence[str], b: Sequence[str]) -> float:
    """``H(A) + H(B) - H(A,B)`` in nats."""
    a, b = _check_partition(q, a, b)
    value = (
        entropy_array(marginal_array(q, a))
        + entropy_array(marginal_array(q, b))
        - entropy_array(q.mass)
    )
    return max(value, 0.0)


def kl_divergence(p: JointDistribution, q: JointDistribution) -> float:
    """Kullback-Leibler divergence ``D(p || q)`` in nats."""
    if p.shape != q.shape:
        raise ValueError("distributions live on different state spaces")
    pos = p.mass > 0
    if np.any(q.mass[pos] <= 0):
        raise SupportMismatch("p charges states outside the support of q")
    value = float(np.sum(p.mass[pos] * np.log(p.mass[pos] / q.mass[pos])))
    return max(value, 0.0)


def product_of_marginals(q: JointDistribution, a: Sequence[str], b: Sequence[str]) -> JointDistribution:
    """The distribution with the A- and B-marginals of ``q`` made independent."""
    a, b = _check_partition(q, a, b)
    ia = _axis_positions(q.space, a)
    ib = _axis_positions(q.space, b)
    ma = marginal_array(q, a)
    mb = marginal_array(q, b)
    # marginal_array keeps the original axis order within each group
    ia_sorted, ib_sorted = sorted(ia), sorted(ib)
    outer = np.multiply.outer(ma, mb)
    order = ia_sorted + ib_sorted
    outer = np.transpose(outer, np.argsort(order))
    return JointDistribution(q.space, outer / outer.sum())


def entropy_directional_derivative(q: JointDistribution, v: TangentVector) -> float:
    """Derivative of entropy at ``q`` along ``v``: ``-sum v_i log q_i``."""
    if v.space.shape != q.shape:
        raise ValueError("tangent vector lives on a different space")
    active = v.delta != 0
    if np.any(q.mass[active] <= 0):
        raise ZeroProbabilityOnDirection("direction touches a zero-probability state")
    return float(-np.sum(v.delta[active] * np.log(q.mass[active])))


def mi_directional_derivative(
    q: JointDistribution, v: TangentVector, a: Sequence[str], b: Sequence[str]
) -> float:
    """Derivative of ``I(A:B)`` at ``q`` along ``v``.

    Uses ``D_v I = sum w log q(a,b) - sum w_A log q(a) - sum w_B log q(b)``
    where ``w_A``, ``w_B`` are the marginals of the direction.
    """
    a, b = _check_partition(q, a, b)
    def marg(arr, names):
        keep = set(_axis_positions(q.space, names))
        drop = tuple(i for i in range(arr.ndim) if i not in keep)
        return arr.sum(axis=drop)

    total = 0.0
    for arr_q, arr_v, sign in (
        (q.mass, v.delta, 1.0),
        (marg(q.mass, a), marg(v.delta, a), -1.0),
        (marg(q.mass, b), marg(v.delta, b), -1.0),
    ):
        active = arr_v != 0
        if np.any(arr_q[active] <= 0):
            raise ZeroProbabilityOnDirection("direction touches a zero-probability state")
        total += sign * float(np.sum(arr_v[active] * np.log(arr_q[active])))
    return total
