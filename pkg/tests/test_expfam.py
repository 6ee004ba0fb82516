import math

import numpy as np
import pytest

from thinlab.charlier import CharlierBasis
from thinlab.dist import FamilySpec, make_distribution
from thinlab.divergence import kl, tv
from thinlab.errors import InfeasibleError, NonexistenceError, ParameterError
from thinlab.expfam import (ExpFamily, charlier_family, dual_grid_oracle, dual_search_oracle,
                            log_partition, partition, po_beta, project_one, project_two,
                            signed_loglik, solve_beta_for_mean, tilt, tilted_moments)


def identity(x):
    return np.asarray(x, float)


def wide_poisson(lam, hi=200):
    return ExpFamily(make_distribution(FamilySpec.poisson(lam)), identity, window=(0, hi))


class TestPartition:
    def test_zero(self):
        assert partition(wide_poisson(1.0), [0.0]) == 1.0

    @pytest.mark.parametrize("beta", [-2.0, -0.3, 1e-9, 0.4, 2.0])
    def test_poisson_mgf(self, beta):
        lam = 1.5
        ref = lam * math.expm1(beta)
        np.testing.assert_allclose(log_partition(wide_poisson(lam), [beta]), ref, rtol=1e-12)

    def test_second_derivative_is_variance(self):
        fam = charlier_family(2.0, (2,))
        b, h = -0.3, 1e-4
        f = [log_partition(fam, [b + s * h]) for s in (-1, 0, 1)]
        fd = (f[0] - 2 * f[1] + f[2]) / h ** 2
        np.testing.assert_allclose(fd, tilted_moments(fam, [b])[1][0, 0], rtol=1e-5)

    def test_beta_shape(self):
        with pytest.raises(ParameterError):
            log_partition(wide_poisson(1.0), [0.1, 0.2])


class TestTilt:
    def test_zero_is_base(self):
        fam = wide_poisson(2.0)
        assert tv(tilt(fam, [0.0]), make_distribution(FamilySpec.poisson(2.0))) <= 1e-13

    @pytest.mark.parametrize("beta", [-2.0, -0.5, 0.5, 2.0])
    def test_poisson_tilt_is_poisson(self, beta):
        lam = 1.0
        Q = tilt(wide_poisson(lam), [beta])
        assert tv(Q, make_distribution(FamilySpec.poisson(lam * math.exp(beta)))) <= 1e-10

    def test_chain_rule(self):
        fam = charlier_family(1.0, (2,))
        b = -0.4
        mu = tilted_moments(fam, [b])[0][0]
        np.testing.assert_allclose(kl(tilt(fam, [b]), fam.base), b * mu - log_partition(fam, [b]),
                                   atol=1e-13)

    def test_member_ratio(self):
        # log(q_beta / q0) must be affine in T on the window
        fam = charlier_family(3.0, (1, 2), respect_domain=False)
        b = np.array([0.2, -0.3])
        Q = tilt(fam, b)
        x = Q.support
        ratio = Q.logpmf_at(x) - fam.base.logpmf_at(x)
        t = np.vstack([s(x) for s in fam.statistics])
        resid = ratio - b @ t
        assert np.ptp(resid) <= 1e-11


class TestSolveBeta:
    def test_doubling(self):
        lam = 1.3
        np.testing.assert_allclose(solve_beta_for_mean(wide_poisson(lam), 2 * lam), math.log(2),
                                   atol=1e-10)

    def test_monotone(self):
        fam = wide_poisson(1.0)
        betas = [solve_beta_for_mean(fam, t) for t in (0.2, 0.5, 1.0, 3.0, 9.0)]
        assert all(b > a for a, b in zip(betas, betas[1:]))

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            solve_beta_for_mean(wide_poisson(1.0), -0.5)

    def test_domain_cap(self):
        fam = charlier_family(1.0, (2,))
        with pytest.raises(InfeasibleError):
            solve_beta_for_mean(fam, 0.2)


class TestProjectOne:
    def test_zero_target(self):
        r = project_one(1.0, 2, 0.0)
        assert r.divergence == 0.0 and r.beta[0] == 0.0

    def test_quadratic_lower_bound_and_oracle(self):
        lam, k, h = 1.0, 2, -0.1
        r = project_one(lam, k, h)
        assert abs(r.achieved[0] - h) <= 1e-8
        assert r.divergence >= h * h / 2
        _, val = dual_grid_oracle(charlier_family(lam, (k,)), h)
        assert abs(val - r.divergence) <= 1e-8

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_positive_target_has_no_minimizer(self, k):
        with pytest.raises(NonexistenceError):
            project_one(1.0, k, 0.05)

    def test_degree_one_both_signs(self):
        for h in (-0.4, 0.4):
            r = project_one(2.0, 1, h)
            # tilting Po(2) along C_1 stays Poisson with mean 2 + h sqrt 2
            mu = 2.0 + h * math.sqrt(2.0)
            np.testing.assert_allclose(r.divergence, mu * math.log(mu / 2.0) - mu + 2.0, rtol=1e-9)

    def test_bad_degree(self):
        with pytest.raises(ParameterError):
            project_one(1.0, 0, -0.1)


class TestProjectTwo:
    def test_trivial(self):
        r = project_two(1.0, (1, 2), (0.0, 0.0))
        assert r.divergence == 0.0

    @pytest.mark.parametrize("lam,n", [(1.0, 10), (2.0, 20), (0.5, 5)])
    def test_binomial_targets(self, lam, n):
        B = CharlierBasis(lam, 3)
        bi = make_distribution(FamilySpec.binomial(n, lam / n))
        h = [float(np.sum(bi.pmf * B.eval(k, bi.support))) for k in (2, 3)]
        r = project_two(lam, (2, 3), h)
        assert np.max(np.abs(r.achieved - h)) <= 1e-8
        assert r.divergence <= kl(bi, make_distribution(FamilySpec.poisson(lam)))

    def test_against_search_oracle(self):
        lam, h = 1.0, np.array([0.1, -0.05])
        r = project_two(lam, (1, 2), h)
        fam = charlier_family(lam, (1, 2), respect_domain=False)
        _, val = dual_search_oracle(fam, h, x0=r.beta + 0.05)
        assert abs(val - r.divergence) <= 1e-8

    def test_outside_hull(self):
        # E[C_2] is bounded below by min C_2 on the window
        with pytest.raises(InfeasibleError):
            project_two(1.0, (1, 2), (0.0, -5.0))

    def test_same_degree(self):
        with pytest.raises(ParameterError):
            project_two(1.0, (2, 2), (0.0, 0.0))


class TestPoBeta:
    def test_moments(self):
        lam, n = 1.0, 100
        r = po_beta(lam, n)
        P = r.distribution
        assert abs(P.mean() - lam) <= 1e-9
        assert abs(P.variance() - lam * (1 - lam / n)) <= 1e-9

    def test_beta_vanishes(self):
        b = [abs(po_beta(1.0, n).beta[1]) for n in (10, 100, 1000)]
        assert b[0] > b[1] > b[2] and b[2] < 1e-3

    def test_pythagorean(self):
        lam, n = 1.0, 20
        bi = make_distribution(FamilySpec.binomial(n, lam / n))
        r = po_beta(lam, n)
        lhs = kl(bi, make_distribution(FamilySpec.poisson(lam)))
        rhs = kl(bi, r.distribution) + r.divergence
        assert abs(lhs - rhs) <= 1e-10

    def test_bad_n(self):
        with pytest.raises(ParameterError):
            po_beta(2.0, 2)


class TestSignedLoglik:
    @pytest.mark.parametrize("mu", [0.3, 0.9, 1.5, 4.0])
    def test_poisson_bound(self, mu):
        lam = 1.0
        g = signed_loglik(wide_poisson(lam), mu)
        assert math.copysign(1.0, g) == math.copysign(1.0, mu - lam)
        assert g <= (mu - lam) / math.sqrt(lam) + 1e-12

    def test_center(self):
        fam = wide_poisson(1.0)
        assert signed_loglik(fam, float(tilted_moments(fam, [0.0])[0][0])) == 0.0

    @pytest.mark.parametrize("k", [2, 3])
    def test_charlier_neighbourhood(self, k):
        fam = charlier_family(1.0, (k,))
        for mu in np.linspace(-0.3, -0.01, 8):
            assert signed_loglik(fam, float(mu)) <= mu + 1e-12
