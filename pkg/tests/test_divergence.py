import math

import numpy as np
import pytest
from scipy import stats

from conftest import direct_kl, random_pmf
from thinlab.dist import Distribution, FamilySpec, make_distribution, point_mass
from thinlab.divergence import divergence_taylor_bounds, kl, mix, tv
from thinlab.expfam import ExpFamily
from thinlab.thinning import thin_law


def po(lam):
    return make_distribution(FamilySpec.poisson(lam))


class TestKL:
    def test_self_zero(self):
        P = make_distribution(FamilySpec.geometric(0.4))
        assert kl(P, P) == 0.0

    def test_point_mass_against_poisson(self):
        # -log(e^-1 / 2) = 1 + ln 2
        np.testing.assert_allclose(kl(point_mass(2), po(1.0)), math.log(2 * math.e), rtol=1e-15)

    def test_binomial_against_direct_sum(self):
        x = np.arange(11)
        ref = direct_kl(stats.binom.pmf(x, 10, 0.1), stats.poisson.pmf(x, 1.0))
        got = kl(make_distribution(FamilySpec.binomial(10, 0.1)), po(1.0))
        assert abs(got - ref) <= 1e-12

    def test_infinite_outside_explicit_window(self):
        P = Distribution(0, [0.5, 0.5], 0.0)
        Q = Distribution(0, [1.0], 0.0)
        assert kl(P, Q) == math.inf

    def test_poisson_pair_closed_form(self):
        mu, lam = 1.5, 2.5
        ref = mu * math.log(mu / lam) - mu + lam
        np.testing.assert_allclose(kl(po(mu), po(lam)), ref, rtol=1e-12)

    def test_monotone_along_thinning(self):
        P = make_distribution(FamilySpec.geometric(0.5))
        target = po(1.0)
        d = [kl(thin_law(P, n), target) for n in (1, 2, 4, 8, 16, 32)]
        assert all(b < a for a, b in zip(d, d[1:]))


class TestTV:
    def test_disjoint(self):
        assert tv(point_mass(0), point_mass(1)) == 2.0

    def test_symmetric(self):
        P, Q = po(1.0), make_distribution(FamilySpec.binomial(5, 0.2))
        assert tv(P, Q) == tv(Q, P)

    def test_pinsker(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            w = int(rng.integers(1, 15))
            P = Distribution(0, random_pmf(rng, w), 0.0)
            Q = Distribution(0, random_pmf(rng, w, 2.0), 0.0)
            assert kl(P, Q) >= 0.5 * tv(P, Q) ** 2 - 1e-14


class TestMix:
    def test_endpoints(self):
        P, Q = po(1.0), point_mass(3)
        assert tv(mix(P, Q, 1.0), P) <= 1e-15
        assert tv(mix(P, Q, 0.0), Q) <= 1e-15

    def test_joint_convexity(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            P1, P2, Q1, Q2 = (Distribution(0, random_pmf(rng, 8), 0.0) for _ in range(4))
            t = float(rng.uniform())
            lhs = kl(mix(P1, P2, t), mix(Q1, Q2, t))
            assert lhs <= t * kl(P1, Q1) + (1 - t) * kl(P2, Q2) + 1e-13


def poisson_family(lam):
    base = make_distribution(FamilySpec.poisson(lam))
    hi = int(lam + 60 * math.sqrt(lam) + 80)
    return ExpFamily(base, lambda x: np.asarray(x, float), window=(0, hi))


def binomial_family(n, p):
    return ExpFamily(make_distribution(FamilySpec.binomial(n, p)), lambda x: np.asarray(x, float))


class TestTaylorBounds:
    def test_equal_means(self):
        assert divergence_taylor_bounds(poisson_family(1.0), 0.7, 0.7) == (0.0, 0.0)

    def test_poisson_sandwich(self):
        lo, hi = divergence_taylor_bounds(poisson_family(1.0), 0.8, 1.0)
        d = kl(po(0.8), po(1.0))
        assert lo <= d <= hi
        # variance equals the mean, so the bounds are explicit
        np.testing.assert_allclose((lo, hi), (0.04 / 2.0, 0.04 / 1.6), rtol=1e-9)

    @pytest.mark.parametrize("mu", [0.1, 0.5, 0.99])
    def test_lower_tail_quadratic(self, mu):
        lam = 1.0
        assert kl(po(mu), po(lam)) >= (mu - lam) ** 2 / (2 * lam)

    def test_random_poisson_pairs(self):
        rng = np.random.default_rng(5)
        fam = poisson_family(2.0)
        for _ in range(100):
            mu, nu = rng.uniform(0.2, 6.0, size=2)
            lo, hi = divergence_taylor_bounds(fam, mu, nu)
            d = mu * math.log(mu / nu) - mu + nu
            assert lo - 1e-10 <= d <= hi + 1e-10

    def test_random_binomial_pairs(self):
        rng = np.random.default_rng(6)
        n = 12
        fam = binomial_family(n, 0.4)
        for _ in range(100):
            mu, nu = rng.uniform(0.5, 11.5, size=2)
            lo, hi = divergence_taylor_bounds(fam, mu, nu)
            P = make_distribution(FamilySpec.binomial(n, mu / n))
            Q = make_distribution(FamilySpec.binomial(n, nu / n))
            d = kl(P, Q)
            assert lo - 1e-10 <= d <= hi + 1e-10
