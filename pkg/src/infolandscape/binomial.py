"""Log-binomial signal and noise correlations.

A binomial ``r1 r2 ... - r'1 r'2 ...`` over response states ``r = (x, y)``
is evaluated as the log-ratio of the corresponding probabilities: on the
(X,Y) marginal for the signal correlation ``alpha`` and on the conditional
``Q(x,y|s)`` for the noise correlation ``beta_s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import JointDistribution
from .domain import KernelBasisVector, MarginalPair, shuffle_array, _drop_null_states
from .errors import PreconditionError

SIGN_TOL = 1e-12


@dataclass(frozen=True)
class Binomial:
    """Formal binomial with multisets of ``(x, y)`` states on each side."""

    plus: tuple[tuple[int, int], ...]
    minus: tuple[tuple[int, int], ...]

    def __post_init__(self):
        plus = tuple((int(a), int(b)) for a, b in self.plus)
        minus = tuple((int(a), int(b)) for a, b in self.minus)
        if not plus or not minus:
            raise ValueError("both sides of a binomial must be non-empty")
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)

    @property
    def homogeneous(self) -> bool:
        return len(self.plus) == len(self.minus)

    @classmethod
    def determinant(cls, x: int = 0, x2: int = 1, y: int = 0, y2: int = 1) -> "Binomial":
        """``(x,y)(x',y') - (x,y')(x',y)``."""
        return cls(((x, y), (x2, y2)), ((x, y2), (x2, y)))

    @classmethod
    def of_basis_vector(cls, b: KernelBasisVector) -> "Binomial":
        return cls.determinant(b.x, b.x2, b.y, b.y2)


@dataclass(frozen=True)
class CorrelationValue:
    """A log-scale correlation; ``defined`` is false when a zero probability occurs."""

    value: float
    defined: bool = True

    def sign(self, tol: float = SIGN_TOL) -> int | None:
        if not self.defined:
            return None
        if abs(self.value) <= tol:
            return 0
        return 1 if self.value > 0 else -1


def _log_ratio(table: np.ndarray, b: Binomial) -> CorrelationValue:
    plus = np.array([table[r] for r in b.plus])
    minus = np.array([table[r] for r in b.minus])
    if np.any(plus <= 0) or np.any(minus <= 0):
        return CorrelationValue(float("nan"), False)
    return CorrelationValue(float(np.log(plus).sum() - np.log(minus).sum()), True)


def _mass(q) -> np.ndarray:
    return q.mass if isinstance(q, JointDistribution) else np.asarray(q, float)


def beta(q, b: Binomial, s: int) -> CorrelationValue:
    """Noise correlation of ``b`` in stimulus slice ``s`` (conditional form)."""
    mass = _mass(q)
    slab = mass[s]
    total = slab.sum()
    if total <= 0:
        return CorrelationValue(float("nan"), False)
    return _log_ratio(slab / total, b)


def beta_joint(q, b: Binomial, s: int) -> CorrelationValue:
    """Same as :func:`beta` but evaluated on the joint slice ``Q(s,x,y)``."""
    return _log_ratio(_mass(q)[s], b)


def alpha(q, b: Binomial) -> CorrelationValue:
    """Signal correlation of ``b`` on the (X,Y) marginal."""
    return _log_ratio(_mass(q).sum(axis=0), b)


def shuffled_signal_correlation(p: MarginalPair, b: Binomial) -> CorrelationValue:
    """Signal correlation at the shuffle point of ``p``."""
    p, _ = _drop_null_states(p)
    return alpha(shuffle_array(p), b)


def signal_sign_n2(p: MarginalPair) -> int:
    """Sign of the shuffled signal correlation for two stimuli and binary responses.

    Computed from ``(P(y|s1) - P(y|s2)) (P(x|s1) - P(x|s2))``.
    """
    if p.shape != (2, 2, 2):
        raise PreconditionError(f"needs |S|=|X|=|Y|=2, got {p.shape}")
    if np.any(p.p_s <= 0):
        raise PreconditionError("both stimulus states need positive probability")
    px = p.x_given_s()[:, 0]
    py = p.y_given_s()[:, 0]
    prod = (py[0] - py[1]) * (px[0] - px[1])
    if abs(prod) <= SIGN_TOL:
        return 0
    return 1 if prod > 0 else -1
