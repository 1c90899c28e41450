"""Exhaustive-state oracle for functionals of the m = C(n,2) edge indicators.

Every one of the 2^m indicator assignments is enumerated with its product
probability. A functional is a dense table indexed by the state word, whose
bit a is the indicator of edge a (lexicographic order). Discrete gradients
are taken by brute force on these tables, which makes this module the
independent reference for the closed forms used elsewhere.

Only for tiny graphs: the state space is capped at m <= 20 and the fifth-order
sums of :func:`exact_Bk` at n <= 5.
"""

from __future__ import annotations

import itertools
import math
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import DomainError, ResourceCapError
from .graph import EdgeIndex, GraphSample, all_edges, edge_from_index, edge_index, n_pairs, wedge_count
from .model import probability_matrix
from .moments import exact_mean, exact_variance, poisson_binomial_moments
from .vecnorm import VectorLike, as_vector

MAX_EDGES = 20
BK_MAX_N = 5


def _fsum_dot(a, b) -> float:
    return math.fsum(np.asarray(a, dtype=np.float64) * b)


class StateSpace:
    """All edge-indicator states of the beta-model on n vertices."""

    def __init__(self, mu: VectorLike):
        mu = as_vector(mu)
        n = mu.n
        m = n_pairs(n)
        if m > MAX_EDGES:
            raise ResourceCapError(f"state space 2^{m} exceeds the cap 2^{MAX_EDGES} (n={n})")
        self.mu = mu
        self.n = n
        self.m = m
        self.ends_i, self.ends_j = all_edges(n)
        pm = probability_matrix(mu)
        self.p = pm[self.ends_i, self.ends_j]
        self.q = 1.0 - self.p
        self.h = self.p * self.q
        self.size = 1 << m
        self.states = np.arange(self.size, dtype=np.int64)

    @cached_property
    def bits(self) -> np.ndarray:
        """(m, 2^m) array of edge indicators per state."""
        shifts = np.arange(self.m, dtype=np.int64)[:, None]
        return ((self.states[None, :] >> shifts) & 1).astype(np.int8)

    @cached_property
    def prob(self) -> np.ndarray:
        b = self.bits.astype(bool)
        factors = np.where(b, self.p[:, None], self.q[:, None])
        return np.prod(factors, axis=0)

    def bit(self, i: int, j: int) -> np.ndarray:
        return self.bits[edge_index(i, j, self.n).a]

    def expect(self, table) -> float:
        return _fsum_dot(self.prob, table)

    @cached_property
    def triangle_table(self) -> np.ndarray:
        t = np.zeros(self.size, dtype=np.int64)
        for i, j, k in itertools.combinations(range(self.n), 3):
            t += self.bit(i, j) * self.bit(j, k) * self.bit(i, k)
        return t

    def wedge_table(self, a: int) -> np.ndarray:
        e = edge_from_index(a, self.n)
        v = np.zeros(self.size, dtype=np.int64)
        for k in range(self.n):
            if k != e.i and k != e.j:
                v += self.bit(e.i, k) * self.bit(e.j, k)
        return v

    @cached_property
    def variance(self) -> float:
        return exact_variance(self.mu)

    @cached_property
    def normalized_table(self) -> np.ndarray:
        """F_n on every state, centred and scaled with the exact moments."""
        return (self.triangle_table - exact_mean(self.mu)) / math.sqrt(self.variance)

    def graph(self, state: int) -> GraphSample:
        mask = ((int(state) >> np.arange(self.m)) & 1).astype(bool)
        return GraphSample(self.n, self.ends_i[mask], self.ends_j[mask])

    # -- brute-force gradients

    def difference(self, table: np.ndarray, a: int) -> np.ndarray:
        """f(X_a^+) - f(X_a^-) on every state."""
        flag = np.int64(1) << np.int64(a)
        return table[self.states | flag] - table[self.states & ~flag]

    def gradient(self, table: np.ndarray, a: int) -> np.ndarray:
        return brute_gradient(table, a, self.p[a])

    # -- closed forms evaluated on every state

    def closed_form_D_table(self, a: int) -> np.ndarray:
        return math.sqrt(self.h[a]) * self.wedge_table(a) / math.sqrt(self.variance)

    def delta_table(self, a: int, b: int) -> np.ndarray:
        closing = delta_edge(edge_from_index(a, self.n), edge_from_index(b, self.n), self.n)
        if closing is None:
            return np.zeros(self.size, dtype=np.int8)
        return self.bits[closing.a]

    def closed_form_Dab_table(self, a: int, b: int) -> np.ndarray:
        scale = math.sqrt(self.h[a] * self.h[b]) / math.sqrt(self.variance)
        return scale * self.delta_table(a, b)


def brute_gradient(f: np.ndarray, a: int, p_a: float) -> np.ndarray:
    """D_a f = sqrt(p_a q_a) (f(X_a^+) - f(X_a^-)) for a table f over 2^m states."""
    f = np.asarray(f)
    size = f.size
    m = size.bit_length() - 1
    if size != 1 << m:
        raise DomainError("functional table length must be a power of two")
    if m > MAX_EDGES:
        raise ResourceCapError(f"state space 2^{m} exceeds the cap 2^{MAX_EDGES}")
    if not 0 <= a < m:
        raise DomainError(f"edge index {a} out of range for m={m}")
    if not 0 < p_a < 1:
        raise DomainError("p_a must lie in (0, 1)")
    states = np.arange(size, dtype=np.int64)
    flag = np.int64(1) << np.int64(a)
    return math.sqrt(p_a * (1 - p_a)) * (f[states | flag] - f[states & ~flag])



def delta_edge(ea: EdgeIndex, eb: EdgeIndex, n: int) -> Optional[EdgeIndex]:
    """Edge {l1, l2} joining the free endpoints of two edges sharing one vertex.

    None when the edges are identical or disjoint (Delta_ab = 0 there).
    """
    sa = {ea.i, ea.j}
    sb = {eb.i, eb.j}
    if len(sa & sb) != 1:
        return None
    l1, l2 = sorted(sa ^ sb)
    return edge_index(l1, l2, n)


def _edge(a, n) -> EdgeIndex:
    return a if isinstance(a, EdgeIndex) else edge_from_index(int(a), n)


def _h(mu, e: EdgeIndex) -> float:
    x = mu.entries[e.i] * mu.entries[e.j]
    p = x / (1.0 + x)
    return p * (1.0 - p)


def closed_form_D(g: GraphSample, a, mu: VectorLike, variance: Optional[float] = None) -> float:
    """D_a F_n = sqrt(h_a) V_a / sqrt(Var T_n) on the graph state ``g``."""
    mu = as_vector(mu)
    variance = exact_variance(mu) if variance is None else variance
    if not variance > 0:
        raise DomainError("variance must be positive")
    e = _edge(a, g.n)
    return math.sqrt(_h(mu, e)) * wedge_count(g, e) / math.sqrt(variance)


def closed_form_Dab(a, b, g: GraphSample, mu: VectorLike,
                    variance: Optional[float] = None) -> float:
    """D_a D_b F_n = sqrt(h_a h_b) Delta_ab / sqrt(Var T_n)."""
    mu = as_vector(mu)
    variance = exact_variance(mu) if variance is None else variance
    if not variance > 0:
        raise DomainError("variance must be positive")
    ea, eb = _edge(a, g.n), _edge(b, g.n)
    closing = delta_edge(ea, eb, g.n)
    if closing is None:
        return 0.0
    delta = 1.0 if g.has_edge(closing.i, closing.j) else 0.0
    return math.sqrt(_h(mu, ea) * _h(mu, eb)) * delta / math.sqrt(variance)


# ---------------------------------------------------------------- B_k sums


def _gradient_tables(space: StateSpace):
    """Brute first and second gradients of F_n: shapes (m, S) and (m, m, S)."""
    f = space.normalized_table
    d1 = np.stack([space.gradient(f, a) for a in range(space.m)])
    d2 = np.stack([
        np.stack([space.gradient(d1[b], a) for b in range(space.m)])
        for a in range(space.m)
    ])
    return d1, d2


def exact_Bk(mu: VectorLike) -> tuple[float, float, float, float, float]:
    """The five B_k sums of the Malliavin-Stein bound, by full enumeration.

    Expectations of products of gradients of F_n are taken over all 2^m
    states; the gradients come from brute-force differences only.
    """
    mu = as_vector(mu)
    if mu.n > BK_MAX_N:
        raise ResourceCapError(f"B_k enumeration is limited to n <= {BK_MAX_N}")
    space = StateSpace(mu)
    prob = space.prob
    h = space.h
    d1, d2 = _gradient_tables(space)
    sq1 = d1 * d1
    sq2 = d2 * d2
    # E[D_a^2 D_b^2]
    e_ab = (sq1 * prob) @ sq1.T
    # E[D_ca^2 D_cb^2], indexed [c, a, b]
    e_cab = np.einsum("cas,s,cbs->cab", sq2, prob, sq2)
    e4 = (sq1 * sq1) @ prob
    e4_ab = (sq2 * sq2) @ prob

    b1 = math.fsum(np.sqrt(e_ab[None, :, :] * e_cab).ravel())
    b2 = math.fsum((e_cab / h[:, None, None]).ravel())
    b3 = math.fsum(e4 / h)
    b4 = math.fsum((np.sqrt(e4[:, None] * e4_ab) / h[:, None]).ravel())
    b5 = math.fsum((e4_ab / np.multiply.outer(h, h)).ravel())
    return b1, b2, b3, b4, b5


def exhaustive_btilde(mu: VectorLike) -> dict:
    """B~_1..B~_5 and the pieces of B~_2 from their defining expectations.

    V_a and Delta_ab are brute-force first and second differences of T_n,
    not the closed forms.
    """
    mu = as_vector(mu)
    if mu.n > BK_MAX_N:
        raise ResourceCapError(f"B~ enumeration is limited to n <= {BK_MAX_N}")
    space = StateSpace(mu)
    m, h, prob = space.m, space.h, space.prob
    t = space.triangle_table.astype(np.float64)
    v = np.stack([space.difference(t, a) for a in range(m)])
    delta = np.stack([
        np.stack([space.difference(v[b], a) for b in range(m)]) for a in range(m)
    ])
    ev4 = (v**4) @ prob
    ev22 = (v**2 * prob) @ (v**2).T
    edelta = delta @ prob
    # E[Delta_ca Delta_cb], [c, a, b]
    edd = np.einsum("cas,s,cbs->cab", delta, prob, delta)
    hhh = h[:, None, None] * h[None, :, None] * h[None, None, :]
    # reorder to weights h_c h_a h_b on the [c, a, b] grid (symmetric product)
    b1 = math.fsum((hhh * np.sqrt(ev22[None, :, :] * edd)).ravel())
    b2_terms = hhh * edd
    b2 = math.fsum(b2_terms.ravel())
    b3 = math.fsum(h * ev4)
    hh = np.multiply.outer(h, h)
    b4 = math.fsum((hh * np.sqrt(ev4[:, None] * edelta)).ravel())
    b5 = math.fsum((hh * edelta).ravel())

    parts = {"b21": [], "b22_path": [], "b22_star": [], "b2_tri": []}
    edges = [edge_from_index(a, space.n) for a in range(m)]
    for c, a, b in itertools.product(range(m), repeat=3):
        val = b2_terms[c, a, b]
        if val == 0.0:
            continue
        if a == b:
            parts["b21"].append(val)
            continue
        ec, ea, eb = edges[c], edges[a], edges[b]
        verts = {ec.i, ec.j, ea.i, ea.j, eb.i, eb.j}
        if len(verts) == 3:
            parts["b2_tri"].append(val)
        elif ({ea.i, ea.j} & {ec.i, ec.j}) == ({eb.i, eb.j} & {ec.i, ec.j}):
            parts["b22_star"].append(val)
        else:
            parts["b22_path"].append(val)
    out = {k: math.fsum(vals) for k, vals in parts.items()}
    out["b22"] = out["b22_path"] + out["b22_star"]
    out.update(b1=b1, b2=b2, b3=b3, b4=b4, b5=b5)
    return out


def exhaustive_wedge_moments(mu: VectorLike, a: int) -> list[float]:
    """E[V_a^k], k = 1..4, by enumeration."""
    space = StateSpace(mu)
    v = space.wedge_table(a).astype(np.float64)
    return [space.expect(v**k) for k in (1, 2, 3, 4)]


def wedge_rates(mu: VectorLike, a: int) -> list[float]:
    """Success rates p_{i_a k} p_{j_a k} of the wedge indicators of edge a."""
    mu = as_vector(mu)
    e = edge_from_index(a, mu.n)
    pm = probability_matrix(mu)
    return [pm[e.i, k] * pm[e.j, k] for k in range(mu.n) if k not in (e.i, e.j)]


# ------------------------------------------------------------ oracle suite

ORACLE_TOLERANCES = {
    "exact_moments": 1e-10,
    "normalization": 1e-10,
    "gradient_D": 1e-10,
    "gradient_Dab": 1e-10,
    "Dab_symmetry": 0.0,
    "commutation": 1e-12,
    "wedge_moments": 1e-10,
    "btilde": 1e-9,
    "Bk_vs_btilde": 1e-9,
}


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def random_mu(rng: np.random.Generator, n: int, low: float = 0.05, high: float = 2.0):
    """Log-uniform propensities on [low, high]."""
    return np.exp(rng.uniform(math.log(low), math.log(high), size=n))


def check_state_space(mu: VectorLike) -> dict:
    """Largest deviation of each closed form from enumeration for one vector."""
    mu = as_vector(mu)
    space = StateSpace(mu)
    dev = {}
    t = space.triangle_table.astype(np.float64)
    mean = space.expect(t)
    var = space.expect((t - mean) ** 2)
    dev["exact_moments"] = max(_rel(exact_mean(mu), mean), _rel(exact_variance(mu), var))

    f = space.normalized_table
    dev["normalization"] = max(abs(space.expect(f)), abs(space.expect(f * f) - 1.0))

    d1 = [space.gradient(f, a) for a in range(space.m)]
    dev["gradient_D"] = max(
        float(np.max(np.abs(space.closed_form_D_table(a) - d1[a]))) for a in range(space.m)
    )
    worst = 0.0
    sym = 0.0
    comm = 0.0
    for a in range(space.m):
        for b in range(space.m):
            brute_ab = space.gradient(d1[b], a)
            closed = space.closed_form_Dab_table(a, b)
            worst = max(worst, float(np.max(np.abs(closed - brute_ab))))
            sym = max(sym, float(np.max(np.abs(closed - space.closed_form_Dab_table(b, a)))))
            comm = max(comm, float(np.max(np.abs(brute_ab - space.gradient(d1[a], b)))))
    dev["gradient_Dab"] = worst
    dev["Dab_symmetry"] = sym
    dev["commutation"] = comm

    wm = 0.0
    for a in range(space.m):
        rates = wedge_rates(mu, a)
        want = [space.expect(space.wedge_table(a).astype(np.float64) ** k) for k in (1, 2, 3, 4)]
        got = poisson_binomial_moments(rates, 4)
        wm = max(wm, max(_rel(g, w) for g, w in zip(got, want)))
    dev["wedge_moments"] = wm

    if mu.n <= BK_MAX_N:
        from .bounds import btilde_terms

        ex = exhaustive_btilde(mu)
        cf = btilde_terms(mu)
        # pieces that vanish exactly (no 4-vertex paths at n = 3) carry
        # cancellation noise, so compare against the overall magnitude
        scale = max(abs(v) for v in ex.values())
        dev["btilde"] = max(abs(cf[k] - ex[k]) for k in cf) / scale
        bk = exact_Bk(mu)
        v2 = space.variance**2
        dev["Bk_vs_btilde"] = max(_rel(bk[k] * v2, ex[f"b{k + 1}"]) for k in range(5))
    return dev


def oracle_suite(n: int, trials: int, seed: int) -> dict:
    """Run every exhaustive check on ``trials`` random vectors of length n."""
    if n < 3:
        raise DomainError("oracle checks need n >= 3 (no triangles otherwise)")
    if n_pairs(n) > MAX_EDGES:
        raise ResourceCapError(f"n={n} exceeds the state-space cap 2^{MAX_EDGES}")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    worst: dict = {}
    for _ in range(trials):
        for key, val in check_state_space(random_mu(rng, n)).items():
            worst[key] = max(worst.get(key, 0.0), val)
    checks = {
        key: {
            "passed": bool(worst[key] <= ORACLE_TOLERANCES[key]),
            "max_deviation": worst[key],
            "tolerance": ORACLE_TOLERANCES[key],
        }
        for key in sorted(worst)
    }
    return {
        "n": n,
        "trials": trials,
        "seed": seed,
        "states_per_trial": 1 << n_pairs(n),
        "states_total": trials * (1 << n_pairs(n)),
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
    }
