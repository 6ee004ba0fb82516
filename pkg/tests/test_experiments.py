import json
import math

import numpy as np
import pytest
from scipy import stats

from conftest import direct_kl
from thinlab.dist import FamilySpec
from thinlab.errors import ConfigError, ParameterError
from thinlab.experiments import (PROJRATE_COLUMNS, RATE_COLUMNS, ExperimentConfig, VerifyOptions,
                                 binomial_poisson_kl, binomial_poisson_logratio, records_csv, richardson,
                                 run_projection_rate, run_rate_experiment, run_verify_suite)


class TestConfig:
    def test_binomial_needs_lambda(self):
        with pytest.raises(ConfigError):
            ExperimentConfig()

    @pytest.mark.parametrize("grid", [(), (10, 10), (5, 3), (0, 4)])
    def test_bad_grid(self, grid):
        with pytest.raises(ConfigError):
            ExperimentConfig(lam=1.0, n_grid=grid)

    def test_lambda_from_family(self):
        cfg = ExperimentConfig(FamilySpec.bernoulli(0.3))
        assert cfg.lam == pytest.approx(0.3) and cfg.family_name == "bernoulli"

    def test_lambda_mismatch(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(FamilySpec.bernoulli(0.3), lam=0.5)

    def test_eps_range(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(lam=1.0, eps_trunc=1e-3)

    def test_unknown_route(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("negbin", lam=1.0)


class TestHelpers:
    def test_richardson_exact(self):
        ns = np.array([10, 20, 40, 80])
        a, b = richardson(ns, 0.25 + 3.0 / ns)
        np.testing.assert_allclose((a, b), (0.25, 3.0), rtol=1e-12)

    @pytest.mark.parametrize("n,lam", [(5, 1.0), (40, 2.0), (300, 0.5)])
    def test_logratio_against_scipy(self, n, lam):
        x = np.arange(n + 1)
        ref = stats.binom.logpmf(x, n, lam / n) - stats.poisson.logpmf(x, lam)
        np.testing.assert_allclose(binomial_poisson_logratio(n, lam)(x), ref, rtol=1e-10, atol=1e-11)

    def test_kl_against_direct(self):
        n, lam = 30, 1.5
        x = np.arange(n + 1)
        ref = direct_kl(stats.binom.pmf(x, n, lam / n), stats.poisson.pmf(x, lam))
        assert abs(binomial_poisson_kl(n, lam) - ref) <= 1e-13


class TestRate:
    def test_binomial_limit(self):
        res = run_rate_experiment(ExperimentConfig(lam=1.0))
        assert res.closed_form and res.kappa == 2
        assert abs(res.extrapolated / 0.25 - 1) <= 0.02
        assert res.holds

    def test_poisson_rows_are_zero(self):
        res = run_rate_experiment(ExperimentConfig(FamilySpec.poisson(1.0), n_grid=(2, 4, 8)))
        assert res.kappa is None
        assert all(r.scaled <= 1e-13 for r in res.rows)

    def test_bernoulli_bound(self):
        p = 0.3
        res = run_rate_experiment(ExperimentConfig(FamilySpec.bernoulli(p), n_grid=(4, 8, 16, 32, 64)))
        assert res.kappa == 2
        np.testing.assert_allclose(res.rows[0].limit, p * p / 4, rtol=1e-10)
        assert res.n0 is not None
        for r in res.rows:
            if r.n >= res.n0:
                assert r.scaled >= r.bound

    def test_geometric_kappa(self):
        res = run_rate_experiment(ExperimentConfig(FamilySpec.geometric(0.5), n_grid=(8, 16, 32)))
        assert res.kappa == 2 and res.c > 0 and res.holds

    def test_csv_deterministic(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            run_rate_experiment(ExperimentConfig(lam=0.5, n_grid=(20, 40), csv_path=str(p)))
        a, b = (p.read_bytes() for p in paths)
        assert a == b
        assert a.decode().splitlines()[0] == ",".join(RATE_COLUMNS)

    def test_json_summary(self, tmp_path):
        path = tmp_path / "s.json"
        run_rate_experiment(ExperimentConfig(lam=2.0, n_grid=(20, 40), json_path=str(path)))
        d = json.loads(path.read_text())
        assert d["kappa"] == 2 and d["c"] == pytest.approx(-2 / math.sqrt(2))


class TestProjectionRate:
    def test_small_grid(self):
        res = run_projection_rate(ExperimentConfig(lam=1.0, n_grid=(25, 50, 100)))
        assert res.passed
        assert res.csv.splitlines()[0] == ",".join(PROJRATE_COLUMNS)
        gaps = [r["poisson_gap"] for r in res.rows]
        assert all(abs(g - 0.25) < 0.02 for g in gaps)

    def test_lambda_too_large(self):
        with pytest.raises(ParameterError):
            run_projection_rate(ExperimentConfig(lam=5.0, n_grid=(4, 8)))


class TestVerifySuite:
    def test_unknown(self):
        with pytest.raises(ConfigError):
            run_verify_suite(["bogus"])

    def test_beta0(self):
        records, code = run_verify_suite(["beta0"])
        assert code == 0 and {r.name for r in records} >= {"beta0.residual", "beta0.split"}

    def test_case2_emits_curves(self, tmp_path):
        records, code = run_verify_suite(["case2"], VerifyOptions(out_dir=str(tmp_path), prefix="fig"))
        assert code == 0
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["fig_case2_ceiling.csv", "fig_case2_near_one.csv", "fig_case2_small_lambda.csv"]
        head = (tmp_path / "fig_case2_small_lambda.csv").read_text().splitlines()
        assert head[0] == "lambda,lhs,rhs" and len(head) == 5002

    def test_small_property_suites(self):
        records, code = run_verify_suite(["thm12", "thm2", "conjecture"], VerifyOptions(trials=200))
        assert code == 0 and len(records) == 4

    def test_records_csv(self):
        records, _ = run_verify_suite(["gaussian"])
        text = records_csv(records)
        assert text.splitlines()[0].startswith("name,grid,margin")
        assert len(text.splitlines()) == len(records) + 1
