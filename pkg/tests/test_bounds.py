import json
import math

import numpy as np
import pytest

from betatri.bounds import (
    a_terms,
    bound_report,
    btilde_terms,
    eta,
    kolmogorov_rate,
    rate_denominator,
)
from betatri.errors import DomainError, ResourceCapError
from betatri.experiment import loglog_slope
from betatri.malliavin import exhaustive_btilde, random_mu
from betatri.model import BlockDesign
from betatri.vecnorm import norm_pow

# degrees of homogeneity of A_1..A_5 read off their norm products
DEGREES = (2.0, 5.0, 7.5, 6.5, 3.5)


class TestATerms:
    def test_unit_pair(self):
        a = a_terms([1, 1])
        assert a[0] == pytest.approx(2, rel=1e-15)
        assert a[2] == pytest.approx(2**2.25, rel=1e-15)
        assert a[2] == pytest.approx(4.7568, abs=1e-4)

    @pytest.mark.parametrize("n,c", [(10, 0.5), (1000, 0.03), (37, 1.7)])
    def test_constant_vectors(self, n, c):
        want = (n * c**2, n**1.75 * c**5, n**2.25 * c**7.5, n**2.25 * c**6.5, n**1.5 * c**3.5)
        assert a_terms([c] * n) == pytest.approx(want, rel=1e-12)

    def test_homogeneity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            mu = random_mu(rng, int(rng.integers(2, 40)))
            c = float(rng.uniform(0.1, 5))
            base = a_terms(mu)
            scaled = a_terms(mu * c)
            assert all(x > 0 for x in base)
            for b, s, d in zip(base, scaled, DEGREES):
                assert s == pytest.approx(b * c**d, rel=1e-12)

    def test_denominator_pieces_scale(self):
        mu = np.array([0.2, 0.5, 0.9])
        c = 2.0
        lhs = rate_denominator(mu * c)
        l2, l3 = norm_pow(mu, 2), norm_pow(mu, 3) ** 2
        want = l2**1.25 * (c**8.5 * l3 + c**4.5 * l2)
        assert lhs == pytest.approx(want, rel=1e-13)


class TestRate:
    def test_unit_pair(self):
        want = math.fsum(a_terms([1, 1])) / (2**1.25 * (4 + 2))
        assert kolmogorov_rate([1, 1]) == pytest.approx(want, rel=1e-15)

    def test_constant_vector_slope(self):
        ns = [10**3, 10**4, 10**5]
        rates = [kolmogorov_rate(np.full(n, n**-0.25)) for n in ns]
        slope, _ = loglog_slope(ns, rates)
        assert abs(slope + eta(0.5)) <= 0.05


class TestEta:
    def test_values(self):
        assert eta(0.5) == 0.5
        assert eta(2 / 3) == 5 / 12
        assert eta(0.8) == 0.25

    def test_continuity(self):
        for x, v in ((0.5, 0.5), (2 / 3, 5 / 12)):
            assert abs(eta(x) - v) <= 1e-12
            assert abs(eta(math.nextafter(x, 1)) - v) <= 1e-12
            assert abs(eta(math.nextafter(x, 0)) - v) <= 1e-12

    def test_decreasing(self):
        grid = np.linspace(0.001, 0.999, 2000)
        vals = [eta(a) for a in grid]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("alpha", [0, 1, -0.1, 1.5])
    def test_domain(self, alpha):
        with pytest.raises(DomainError):
            eta(alpha)


class TestBtilde:
    def test_hand_values(self):
        b = btilde_terms([1, 1, 1])
        assert b["b5"] == pytest.approx(0.1875, rel=1e-15)
        assert b["b22"] == 0
        assert b["b21"] == pytest.approx(0.046875, rel=1e-15)
        assert b["b2_tri"] == pytest.approx(0.0234375, rel=1e-15)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_exhaustive(self, n):
        rng = np.random.default_rng(30 + n)
        for _ in range(10):
            mu = random_mu(rng, n)
            got = btilde_terms(mu)
            want = exhaustive_btilde(mu)
            scale = max(abs(v) for v in want.values())
            for key, val in got.items():
                assert abs(val - want[key]) <= 1e-9 * scale, key

    def test_pieces_add_up(self):
        b = btilde_terms(random_mu(np.random.default_rng(0), 25))
        assert b["b22"] == pytest.approx(b["b22_path"] + b["b22_star"], rel=1e-14)
        assert b["b2"] == pytest.approx(b["b21"] + b["b22"] + b["b2_tri"], rel=1e-14)

    def test_chain(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            mu = random_mu(rng, int(rng.integers(3, 31)))
            b = btilde_terms(mu)
            l2, l3 = norm_pow(mu, 2), norm_pow(mu, 3) ** 2
            assert b["b5"] <= l2**3
            assert b["b21"] <= l2 * l3
            assert b["b22"] <= 2 * l2**2 * l3

    def test_cap(self):
        with pytest.raises(ResourceCapError):
            btilde_terms(np.linspace(0.1, 1, 50), max_classes=10)

    def test_block_design_is_cheap(self):
        from betatri.model import block_mu

        b = btilde_terms(block_mu(BlockDesign((1.0, 2.0), 0.5), 10**5))
        assert all(math.isfinite(v) and v > 0 for v in b.values())


class TestReport:
    def test_design_echoes_eta(self):
        from betatri.model import block_mu

        d = BlockDesign((1.0,), 0.5)
        rep = bound_report(block_mu(d, 1000), d)
        doc = json.loads(rep.to_json())
        assert doc["eta"] == 0.5 and doc["alpha"] == 0.5
        assert len(doc["a_terms"]) == 5 and doc["denominator"] > 0
        assert "not a certified" in doc["notes"][0]

    def test_small_n_adds_enumerated_terms(self):
        rep = bound_report([0.4, 0.8, 1.2, 0.6])
        assert {"b1", "b4"} <= set(rep.btilde)

    def test_cap_becomes_note(self):
        rep = bound_report(np.linspace(0.1, 1, 40), max_classes=10)
        assert rep.btilde is None
        assert any("skipped" in note for note in rep.notes)
