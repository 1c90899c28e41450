"""Power sums and L_s norms of positive vectors, plus checkers for the two
norm inequalities the Berry-Esseen argument leans on.

All sums run over the entries sorted by ascending magnitude and are reduced
with :func:`math.fsum`, so results do not depend on input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import DomainError

# relative slack for inequality checks; absorbs rounding in tight cases
INEQ_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class HeterogeneityVector:
    """Positive per-vertex propensities mu_i = exp(beta_i), length >= 2.

    The entries are stored as a read-only float64 array.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64).ravel()
        if arr.size < 2:
            raise DomainError(f"need at least 2 entries, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("entries must be finite")
        bad = np.flatnonzero(arr <= 0)
        if bad.size:
            raise DomainError(
                f"entries must be strictly positive; entry {bad[0]} is {arr[bad[0]]!r}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return int(self.entries.size)

    @property
    def max(self) -> float:
        return float(self.entries.max())

    @property
    def min(self) -> float:
        return float(self.entries.min())

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, HeterogeneityVector):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def scaled(self, c: float) -> "HeterogeneityVector":
        return HeterogeneityVector(self.entries * c)


VectorLike = Union[HeterogeneityVector, Sequence[float], np.ndarray]


def as_vector(v: VectorLike) -> HeterogeneityVector:
    if isinstance(v, HeterogeneityVector):
        return v
    return HeterogeneityVector(v)


class InequalityWitness(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _check_positive_order(s):
    if not s > 0 or not math.isfinite(s):
        raise DomainError(f"norm order must be a positive finite real, got {s!r}")


def _witness(lhs: float, rhs: float) -> InequalityWitness:
    return InequalityWitness(lhs, rhs, bool(lhs <= rhs * (1 + INEQ_RTOL)))


def norm_pow(v: VectorLike, s: float) -> float:
    """Return sum_i v_i**s, i.e. ||v||_s**s."""
    _check_positive_order(s)
    x = np.sort(as_vector(v).entries)
    return math.fsum(np.power(x, s))


def norm(v: VectorLike, s: float) -> float:
    """Return the L_s norm (sum_i v_i**s)**(1/s)."""
    return norm_pow(v, s) ** (1.0 / s)


def minmax_ratio(v: VectorLike) -> float:
    v = as_vector(v)
    return v.max / v.min


def check_interpolation(v: VectorLike, s: float, t: float) -> InequalityWitness:
    """Check ||v||_{(s+t)/2}^{s+t} <= ||v||_s^s * ||v||_t^t.

    The left side is computed as (sum v_i^{(s+t)/2})**2, so no fractional
    root is taken.
    """
    _check_positive_order(s)
    _check_positive_order(t)
    lhs = norm_pow(v, (s + t) / 2) ** 2
    rhs = norm_pow(v, s) * norm_pow(v, t)
    return _witness(lhs, rhs)


def check_reverse_cs(
    x: VectorLike, y: VectorLike, s: float, t: float
) -> InequalityWitness:
    """Check the reverse Cauchy-Schwarz inequality for positive vectors:

        ||x||_s^s ||y||_t^t
            <= (x_max^{s/2} y_max^{t/2}) / (x_min^{s/2} y_min^{t/2})
               * (sum_i x_i^{s/2} y_i^{t/2})^2
    """
    _check_positive_order(s)
    _check_positive_order(t)
    x = as_vector(x)
    y = as_vector(y)
    if x.n != y.n:
        raise DomainError(f"length mismatch: {x.n} != {y.n}")
    lhs = norm_pow(x, s) * norm_pow(y, t)
    ratio = (x.max / x.min) ** (s / 2) * (y.max / y.min) ** (t / 2)
    terms = np.power(x.entries, s / 2) * np.power(y.entries, t / 2)
    cross = math.fsum(np.sort(terms))
    return _witness(lhs, ratio * cross * cross)


def check_reverse_norm(v: VectorLike, s: float, t: float) -> InequalityWitness:
    """Self-paired reverse inequality:
    ||v||_s^s ||v||_t^t <= (v_max/v_min)^{(s+t)/2} ||v||_{(s+t)/2}^{s+t}.
    """
    _check_positive_order(s)
    _check_positive_order(t)
    v = as_vector(v)
    lhs = norm_pow(v, s) * norm_pow(v, t)
    rhs = minmax_ratio(v) ** ((s + t) / 2) * norm_pow(v, (s + t) / 2) ** 2
    return _witness(lhs, rhs)
