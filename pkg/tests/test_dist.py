import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from thinlab.dist import (Distribution, FamilySpec, make_distribution, point_mass, require_valid,
                          summary_stats, validate)
from thinlab.errors import ConfigError, InvalidDistributionError, ParameterError


class TestMakeDistribution:
    def test_poisson_at_zero(self):
        P = make_distribution(FamilySpec.poisson(1.0), 1e-15)
        assert P.offset == 0
        np.testing.assert_allclose(P.pmf[0], math.exp(-1.0), rtol=1e-15)

    def test_binomial_exact(self):
        P = make_distribution(FamilySpec.binomial(2, 0.5))
        np.testing.assert_allclose(P.pmf, [0.25, 0.5, 0.25], atol=1e-16)
        assert P.tail_mass == 0.0

    def test_poisson_mean_after_truncation(self):
        P = make_distribution(FamilySpec.poisson(4.0))
        assert abs(P.mean() - 4.0) <= 1e-12

    @pytest.mark.parametrize("spec", [
        FamilySpec.poisson(0.3), FamilySpec.poisson(50.0), FamilySpec.binomial(40, 0.2),
        FamilySpec.geometric(0.4), FamilySpec.negative_binomial(2.5, 0.3), FamilySpec.bernoulli(0.7),
    ])
    def test_matches_scipy_and_budget(self, spec):
        P = make_distribution(spec, 1e-15)
        ref = spec.frozen().pmf(P.support)
        np.testing.assert_allclose(P.pmf, ref, rtol=1e-12, atol=1e-300)
        assert validate(P).passed
        assert P.tail_mass <= 1e-15
        assert abs(math.fsum(P.pmf.tolist()) + P.tail_mass - 1.0) <= 1e-12

    def test_deterministic(self):
        a = make_distribution(FamilySpec.negative_binomial(3.0, 0.2))
        b = make_distribution(FamilySpec.negative_binomial(3.0, 0.2))
        assert a.offset == b.offset and a.pmf.tobytes() == b.pmf.tobytes()

    @pytest.mark.parametrize("eps", [0.0, 1e-5, -1.0])
    def test_eps_out_of_range(self, eps):
        with pytest.raises(ConfigError):
            make_distribution(FamilySpec.poisson(1.0), eps)

    @pytest.mark.parametrize("build", [
        lambda: FamilySpec.poisson(-1.0), lambda: FamilySpec.binomial(0, 0.5),
        lambda: FamilySpec.bernoulli(1.5), lambda: FamilySpec.geometric(0.0),
    ])
    def test_bad_parameters(self, build):
        with pytest.raises(ParameterError):
            make_distribution(build())

    def test_pmf_read_only(self):
        P = make_distribution(FamilySpec.poisson(2.0))
        with pytest.raises(ValueError):
            P.pmf[0] = 0.5

    def test_logpmf_beyond_window(self):
        P = make_distribution(FamilySpec.poisson(2.0))
        x = np.array([P.stop + 5, P.stop + 50])
        np.testing.assert_allclose(P.logpmf_at(x), stats.poisson.logpmf(x, 2.0), rtol=1e-12)


class TestValidate:
    def test_valid_poisson(self):
        assert validate(make_distribution(FamilySpec.poisson(1.0))).passed

    def test_deficit(self):
        r = validate(Distribution(0, [0.5, 0.4], 0.0))
        assert not r.passed
        np.testing.assert_allclose(r.deficit, 0.1, atol=1e-15)

    def test_negative_noise(self):
        r = validate(Distribution(0, [1.0, -1e-18, 1e-18], 0.0))
        assert not r.passed and r.negative_count == 1

    def test_require_valid_raises(self):
        with pytest.raises(InvalidDistributionError):
            require_valid(Distribution(0, [0.5, 0.4], 0.0))

    def test_never_raises_on_nan(self):
        assert not validate(Distribution(0, [math.nan, 1.0])).passed


class TestSummaryStats:
    def test_poisson(self):
        np.testing.assert_allclose(summary_stats(make_distribution(FamilySpec.poisson(2.0))),
                                   (2.0, 2.0), atol=1e-10)

    def test_binomial(self):
        np.testing.assert_allclose(summary_stats(make_distribution(FamilySpec.binomial(10, 0.1))),
                                   (1.0, 0.9), atol=1e-12)

    def test_point_mass(self):
        assert summary_stats(point_mass(3)) == (3.0, 0.0)

    @pytest.mark.parametrize("lam", [0.1, 1.0, 7.5, 50.0])
    def test_poisson_truncation_bound(self, lam):
        eps = 1e-15
        m, v = summary_stats(make_distribution(FamilySpec.poisson(lam), eps))
        tol = 10 * eps * (lam ** 2 + lam) + 1e-14 * lam
        assert abs(m - lam) <= tol and abs(v - lam) <= tol


class TestSerialization:
    def test_explicit_round_trip_exact(self):
        P = Distribution(2, [0.125, 0.375, 0.5], 0.0)
        Q = Distribution.from_json(P.to_json())
        assert Q.offset == 2 and Q.pmf.tobytes() == P.pmf.tobytes()

    def test_family_json_uses_lambda(self):
        d = json.loads(make_distribution(FamilySpec.poisson(1.5)).to_json())
        assert d["kind"] == "poisson" and d["lambda"] == 1.5
        Q = Distribution.from_dict({"kind": "poisson", "lambda": 1.5})
        np.testing.assert_allclose(Q.mean(), 1.5, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=12), st.integers(0, 20))
    def test_round_trip_property(self, weights, offset):
        p = np.array(weights) / sum(weights)
        P = Distribution(offset, p, 0.0)
        Q = Distribution.from_json(P.to_json())
        assert Q.offset == P.offset and np.array_equal(Q.pmf, P.pmf)
