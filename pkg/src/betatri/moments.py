"""Exact and asymptotic moments of the triangle count.

Exact sums over distinct vertex triples are evaluated on *vertex classes*:
vertices sharing a propensity value are grouped, and every sum becomes a
weighted sum over K x K class matrices (K = number of distinct values). For a
generic vector K = n and this is the plain O(n^3) evaluation done with
matrix products; for block designs K is tiny and n = 10^4 costs nothing.

For a pair of distinct vertices i in class r, j in class s, sums over a third
vertex k != i, j are

    S(X, Y)_rs = (X N Y)_rs - X_rr Y_rs - X_rs Y_ss,

with N = diag(class sizes). ``X_rr`` is the value for two distinct vertices of
class r; it is set to 0 for singleton classes, where it has no meaning, which
also makes both corrections vanish exactly. Ordered pairs of distinct
vertices carry weight W_rs = n_r (n_s - [r == s]).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .vecnorm import VectorLike, as_vector, norm_pow


class VertexClasses:
    """Distinct propensity values with multiplicities, and pair matrices."""

    def __init__(self, mu: VectorLike):
        mu = as_vector(mu)
        values, counts = np.unique(mu.entries, return_counts=True)
        self.n = mu.n
        self.values = values
        self.counts = counts.astype(np.float64)
        self.K = values.size
        x = np.multiply.outer(values, values)
        p = x / (1.0 + x)
        single = counts == 1
        idx = np.flatnonzero(single)
        p[idx, idx] = 0.0
        self.p = p
        self.h = p * (1.0 - p)
        w = np.multiply.outer(self.counts, self.counts)
        w[np.diag_indices(self.K)] -= self.counts
        self.weights = w

    def third_vertex_sum(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """S(X, Y)_rs = sum over k != i, j of X_ik Y_kj (i in r, j in s)."""
        full = (x * self.counts) @ y
        return full - np.diag(x)[:, None] * y - x * np.diag(y)[None, :]

    def pair_sum(self, f: np.ndarray) -> float:
        """Sum of f over ordered pairs of distinct vertices."""
        rows = np.sum(self.weights * f, axis=1)
        return math.fsum(rows)


def _classes(mu) -> VertexClasses:
    return mu if isinstance(mu, VertexClasses) else VertexClasses(mu)


def exact_mean(mu) -> float:
    """E[T_n] = sum_{i<j<k} p_ij p_jk p_ki."""
    vc = _classes(mu)
    c = vc.third_vertex_sum(vc.p, vc.p)
    return vc.pair_sum(vc.p * c) / 6.0


def exact_variance(mu) -> float:
    """Var[T_n] from the decomposition into uncorrelated centred terms:

        sum_{i<j} c_ij^2 h_ij + sum_{i<j, k} p_ij^2 h_jk h_ki
            + sum_{i<j<k} h_ij h_jk h_ki,

    where h_ij = p_ij (1 - p_ij) and c_ij = sum_{k != i,j} p_jk p_ki.
    """
    vc = _classes(mu)
    c = vc.third_vertex_sum(vc.p, vc.p)
    hh = vc.third_vertex_sum(vc.h, vc.h)
    linear = vc.pair_sum(c * c * vc.h) / 2.0
    quadratic = vc.pair_sum(vc.p * vc.p * hh) / 2.0
    cubic = vc.pair_sum(vc.h * hh) / 6.0
    return math.fsum([linear, quadratic, cubic])


def asymptotic_mean(mu: VectorLike) -> float:
    return norm_pow(mu, 2) ** 3 / 6.0


def asymptotic_variance(mu: VectorLike) -> float:
    l2sq = norm_pow(mu, 2)
    l3_6 = norm_pow(mu, 3) ** 2
    return l2sq**2 * (3.0 * l3_6 + l2sq) / 6.0


@dataclass(frozen=True)
class MomentReport:
    exact_mean: float
    exact_var: float
    asym_mean: float
    asym_var: float
    mean_ratio: float
    var_ratio: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def moment_report(mu: VectorLike) -> MomentReport:
    mu = as_vector(mu)
    vc = VertexClasses(mu)
    em, ev = exact_mean(vc), exact_variance(vc)
    am, av = asymptotic_mean(mu), asymptotic_variance(mu)
    return MomentReport(em, ev, am, av, em / am, ev / av)


def normalize(t, report: MomentReport, use_exact: bool = True):
    """F_n = (T_n - E T_n) / sqrt(Var T_n); accepts a scalar or an array."""
    mean = report.exact_mean if use_exact else report.asym_mean
    var = report.exact_var if use_exact else report.asym_var
    if not var > 0:
        raise DomainError("cannot normalise with zero variance")
    sd = math.sqrt(var)
    if np.ndim(t) == 0:
        return (float(t) - mean) / sd
    return (np.asarray(t, dtype=np.float64) - mean) / sd


# ------------------------------------------------------ Poisson-binomial sums


def cumulants_to_raw(k1, k2, k3, k4):
    """First four raw moments from the first four cumulants."""
    m1 = k1
    m2 = k2 + k1 * k1
    m3 = k3 + 3 * k2 * k1 + k1**3
    m4 = k4 + 4 * k3 * k1 + 3 * k2 * k2 + 6 * k2 * k1 * k1 + k1**4
    return m1, m2, m3, m4


def _bernoulli_cumulants(power_sums):
    """Cumulants of a sum of independent Bernoulli(r_k) from S_q = sum r_k^q."""
    s1, s2, s3, s4 = power_sums
    return (
        s1,
        s1 - s2,
        s1 - 3 * s2 + 2 * s3,
        s1 - 7 * s2 + 12 * s3 - 6 * s4,
    )


def poisson_binomial_moments(rates: Sequence[float], order: int = 4) -> list[float]:
    """Raw moments E[V^k], k = 1..order, of V = sum of independent Bernoulli(rates)."""
    if order not in (1, 2, 3, 4):
        raise DomainError(f"order must be 1..4, got {order!r}")
    r = np.asarray(rates, dtype=np.float64).ravel()
    if np.any(~((r > 0) & (r < 1))):
        raise DomainError("rates must lie strictly in (0, 1)")
    sums = [math.fsum(r**q) for q in (1, 2, 3, 4)]
    raw = cumulants_to_raw(*_bernoulli_cumulants(sums))
    return [float(v) for v in raw[:order]]


def wedge_moment_matrices(mu) -> tuple[np.ndarray, ...]:
    """Class-level raw moments E[V_a^k], k = 1..4, for an edge between classes.

    Entry (r, s) is the moment of the wedge count of a vertex pair i in r,
    j in s; the rates are p_ik p_jk for k != i, j.
    """
    vc = _classes(mu)
    sums = []
    for q in (1, 2, 3, 4):
        pq = vc.p**q
        sums.append(vc.third_vertex_sum(pq, pq))
    return cumulants_to_raw(*_bernoulli_cumulants(sums))


def wedge_moment_ratio(mu, s: int) -> float:
    """max over edges of E[V_a^s] / (||mu||_2^2 mu_i mu_j + ||mu||_2^{2s} mu_i^s mu_j^s)."""
    if s not in (1, 2, 3, 4):
        raise DomainError("only s in 1..4 is supported")
    vc = _classes(mu)
    ev = wedge_moment_matrices(vc)[s - 1]
    l2sq = float(np.sum(vc.counts * vc.values**2))
    x = np.multiply.outer(vc.values, vc.values)
    ref = l2sq * x + l2sq**s * x**s
    valid = vc.weights > 0
    return float(np.max((ev / ref)[valid]))
