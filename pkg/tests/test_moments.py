import itertools
import json
import math

import numpy as np
import pytest

from betatri.errors import DomainError
from betatri.experiment import loglog_slope
from betatri.malliavin import StateSpace, random_mu, wedge_rates
from betatri.model import BlockDesign, block_mu, probability_matrix
from betatri.moments import (
    VertexClasses,
    asymptotic_mean,
    asymptotic_variance,
    exact_mean,
    exact_variance,
    moment_report,
    normalize,
    poisson_binomial_moments,
    wedge_moment_matrices,
    wedge_moment_ratio,
)


def direct_moments(mu):
    """Plain triple loops over vertices; the reference for the class-reduced sums."""
    p = probability_matrix(mu)
    h = p * (1 - p)
    n = len(mu)
    mean = 0.0
    var = 0.0
    for i, j, k in itertools.combinations(range(n), 3):
        mean += p[i, j] * p[j, k] * p[k, i]
        var += h[i, j] * h[j, k] * h[k, i]
    for i, j in itertools.combinations(range(n), 2):
        others = [k for k in range(n) if k not in (i, j)]
        c = sum(p[j, k] * p[k, i] for k in others)
        var += c * c * h[i, j]
        var += sum(p[i, j] ** 2 * h[j, k] * h[k, i] for k in others)
    return mean, var


def enumerate_moments(mu):
    space = StateSpace(mu)
    t = space.triangle_table.astype(np.float64)
    m = space.expect(t)
    return m, space.expect((t - m) ** 2)


class TestExactMoments:
    def test_hand_values(self):
        assert exact_mean([1, 1, 1]) == 0.125
        assert exact_variance([1, 1, 1]) == 7 / 64
        assert exact_mean([1, 1, 1, 1]) == 0.5

    def test_two_vertices(self):
        assert exact_mean([1.0, 2.0]) == 0
        assert exact_variance([1.0, 2.0]) == 0

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_enumeration_oracle(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(20):
            mu = random_mu(rng, n)
            m, v = enumerate_moments(mu)
            assert exact_mean(mu) == pytest.approx(m, rel=1e-10)
            assert exact_variance(mu) == pytest.approx(v, rel=1e-10)

    @pytest.mark.parametrize("pattern", ["distinct", "repeated", "mixed"])
    def test_class_reduction_against_loops(self, pattern):
        rng = np.random.default_rng(7)
        n = 22
        if pattern == "distinct":
            mu = rng.uniform(0.1, 1.5, n)
        elif pattern == "repeated":
            mu = rng.choice([0.3, 0.9, 1.4], n)
        else:
            mu = np.concatenate([rng.uniform(0.1, 1.5, 5), [0.5] * 10, [1.2] * 7])
        m, v = direct_moments(mu)
        assert exact_mean(mu) == pytest.approx(m, rel=1e-12)
        assert exact_variance(mu) == pytest.approx(v, rel=1e-12)

    def test_class_counts(self):
        vc = VertexClasses([0.5, 0.5, 1.0, 2.0, 2.0, 2.0])
        assert vc.K == 3
        assert vc.counts.tolist() == [2, 1, 3]
        assert vc.pair_sum(np.ones((3, 3))) == 6 * 5

    def test_bounds(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(3, 40))
            mu = random_mu(rng, n)
            assert 0 <= exact_mean(mu) <= math.comb(n, 3)
            assert exact_variance(mu) >= 0


class TestAsymptotic:
    def test_examples(self):
        assert asymptotic_mean([1, 1, 1, 1]) == pytest.approx(64 / 6)
        assert asymptotic_variance([1, 1, 1, 1]) == pytest.approx(16 * (3 * 16 + 4) / 6)
        assert asymptotic_variance([1, 1, 1, 1]) == pytest.approx(138.67, abs=0.01)

    @pytest.mark.parametrize("n,c", [(10, 0.3), (57, 0.05), (200, 1.1)])
    def test_constant(self, n, c):
        l2 = n * c * c
        assert asymptotic_mean([c] * n) == pytest.approx(l2**3 / 6, rel=1e-12)
        want = l2**2 * (3 * (n * c**3) ** 2 + l2) / 6
        assert asymptotic_variance([c] * n) == pytest.approx(want, rel=1e-12)

    def test_large_block_design(self):
        rep = moment_report(block_mu(BlockDesign((1.0,), 0.5), 10**4))
        assert 0.97 <= rep.mean_ratio <= 1.0
        assert 0.9 <= rep.var_ratio <= 1.1

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
    def test_monotone_convergence(self, alpha):
        d = BlockDesign((1.0, 2.0), alpha)
        gaps = []
        for n in (10**2, 10**3, 10**4):
            rep = moment_report(block_mu(d, n))
            gaps.append((abs(rep.mean_ratio - 1), abs(rep.var_ratio - 1)))
        for a, b in zip(gaps, gaps[1:]):
            assert b[0] < a[0] and b[1] < a[1]


class TestReport:
    def test_json(self):
        rep = moment_report([1, 1, 1])
        doc = json.loads(rep.to_json())
        assert set(doc) == {"exact_mean", "exact_var", "asym_mean", "asym_var",
                            "mean_ratio", "var_ratio"}
        assert doc["exact_var"] == 7 / 64

    def test_normalize(self):
        rep = moment_report([1, 1, 1])
        assert normalize(rep.exact_mean, rep) == 0
        assert normalize(rep.exact_mean + math.sqrt(rep.exact_var), rep) == pytest.approx(1)
        assert normalize(1, rep) == pytest.approx(math.sqrt(7), rel=1e-14)
        assert normalize(np.array([1, 0]), rep) == pytest.approx([math.sqrt(7), -1 / math.sqrt(7)])
        asym = normalize(1, rep, use_exact=False)
        assert asym == pytest.approx((1 - rep.asym_mean) / math.sqrt(rep.asym_var))

    def test_normalize_zero_variance(self):
        with pytest.raises(DomainError):
            normalize(0, moment_report([1.0, 1.0]))


class TestPoissonBinomial:
    def test_single_rate(self):
        assert poisson_binomial_moments([0.3], 4) == pytest.approx([0.3] * 4, rel=1e-15)

    def test_two_halves(self):
        assert poisson_binomial_moments([0.5, 0.5], 4)[3] == pytest.approx(4.5, rel=1e-15)

    def test_enumeration(self):
        rates = np.random.default_rng(3).uniform(0.01, 0.99, 10)
        want = np.zeros(4)
        for bits in itertools.product([0, 1], repeat=10):
            b = np.array(bits)
            prob = np.prod(np.where(b == 1, rates, 1 - rates))
            want += prob * b.sum() ** np.arange(1, 5)
        got = poisson_binomial_moments(rates, 4)
        assert got == pytest.approx(want.tolist(), rel=1e-12)

    @pytest.mark.parametrize("rates,order", [([0.5, 1.0], 2), ([0.0, 0.5], 2), ([0.5], 5),
                                             ([0.5], 0)])
    def test_domain(self, rates, order):
        with pytest.raises(DomainError):
            poisson_binomial_moments(rates, order)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_wedge_moments_match_enumeration(self, n):
        rng = np.random.default_rng(n)
        for _ in range(5):
            mu = random_mu(rng, n)
            space = StateSpace(mu)
            for a in range(space.m):
                v = space.wedge_table(a).astype(np.float64)
                want = [space.expect(v**k) for k in (1, 2, 3, 4)]
                assert poisson_binomial_moments(wedge_rates(mu, a), 4) == pytest.approx(
                    want, rel=1e-12)

    def test_class_matrices_match_rates(self):
        mu = np.array([0.4, 0.4, 0.9, 1.3, 1.3, 1.3])
        mats = wedge_moment_matrices(mu)
        vc = VertexClasses(mu)
        pos = {v: r for r, v in enumerate(vc.values)}
        for i, j in [(0, 1), (0, 2), (2, 3), (3, 4)]:
            p = probability_matrix(mu)
            rates = [p[i, k] * p[j, k] for k in range(6) if k not in (i, j)]
            want = poisson_binomial_moments(rates, 4)
            got = [m[pos[mu[i]], pos[mu[j]]] for m in mats]
            assert got == pytest.approx(want, rel=1e-12)


class TestWedgeRatio:
    # E[V^s] <= C(s) (lambda + lambda^s) with lambda <= ||mu||_2^2 mu_i mu_j.
    # Factorial moments give C(2) = 1 and C(4) = 1 + 7 + 6 + 1 = 15.
    BOUND = {2: 1.0, 4: 15.0}

    @pytest.mark.parametrize("s", [2, 4])
    def test_bounded_across_sweep(self, s):
        d = BlockDesign((1.0, 2.0), 0.5)
        ns = [50, 100, 200, 500, 1000, 2000]
        ratios = [wedge_moment_ratio(block_mu(d, n), s) for n in ns]
        assert max(ratios) <= self.BOUND[s]
        # the ratio approaches its sparse limit from below and flattens out
        steps = np.diff(np.log(ratios)) / np.diff(np.log(ns))
        assert np.all(np.diff(steps) < 0)
        slope, _ = loglog_slope(ns, ratios)
        assert slope < 0.5

    def test_random_vectors(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            mu = random_mu(rng, int(rng.integers(3, 60)))
            for s in (2, 4):
                assert 0 < wedge_moment_ratio(mu, s) <= self.BOUND[s]

    def test_domain(self):
        with pytest.raises(DomainError):
            wedge_moment_ratio([1, 1, 1], 5)
