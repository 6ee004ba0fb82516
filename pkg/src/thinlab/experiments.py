"""Rate-of-convergence sweeps, projection-rate sweeps and the verification suite driver."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import verify as V
from .charlier import CharlierBasis, hermite_triple_moment
from .dist import DEFAULT_EPS, FamilySpec, make_distribution
from .divergence import kl, tv
from .errors import ConfigError, ParameterError, UnsupportedError
from .expfam import charlier_family, po_beta, tilt_logratio
from .moments import charlier_moment, detect_kappa
from .thinning import convolve_pow, thin_law

RATE_COLUMNS = ("family", "lambda", "n", "kappa", "divergence", "scaled", "bound", "limit")
PROJRATE_COLUMNS = ("lambda", "n", "divergence", "scaled", "generic_scaled", "poisson_gap",
                    "pythagorean_slack")
SUITES = ("beta0", "case1", "case2", "thm12", "thm2", "conjecture", "gaussian")
GATE_TV = 1e-10
SLACK_TOL = 1e-10
POISSON_KL = 1e-14


def fmt(v):
    """17 significant digits for floats; integers and strings as they are."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return "%.17g" % (v + 0.0)  # no "-0"
    return "" if v is None else str(v)


def write_csv(rows, columns, path=None):
    """Rows of dicts as CSV text (``\\n`` line ends), also written to ``path`` when given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


@dataclass
class ExperimentConfig:
    """``family`` is ``"binomial"`` (the Bi(n, lam/n) route) or the FamilySpec of ``X``."""

    family: Union[str, FamilySpec] = "binomial"
    lam: Optional[float] = None
    n_grid: tuple = (250, 500, 1000, 2000)
    kappa: Optional[int] = None
    csv_path: Optional[str] = None
    json_path: Optional[str] = None
    eps_trunc: float = DEFAULT_EPS
    seed: int = 42

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        if not grid:
            raise ConfigError("n-grid is empty")
        if any(n < 1 for n in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"n-grid must be positive and strictly increasing, got {grid}")
        self.n_grid = grid
        if isinstance(self.family, str):
            if self.family != "binomial":
                raise ConfigError(f"unknown family route {self.family!r}")
            if self.lam is None or not self.lam > 0:
                raise ConfigError("the binomial route needs lam > 0")
        else:
            mean = self.family.mean()
            if self.lam is None:
                self.lam = mean
            elif abs(self.lam - mean) > 1e-9 * max(1.0, mean):
                raise ConfigError(f"lam={self.lam} differs from the family mean {mean}")
            if not self.lam > 0:
                raise ConfigError("lam must be > 0")
        if not 0.0 < self.eps_trunc <= 1e-6:
            raise ConfigError(f"eps_trunc must lie in (0, 1e-6], got {self.eps_trunc}")

    @property
    def family_name(self):
        return "binomial" if isinstance(self.family, str) else self.family.kind


@dataclass
class RateRow:
    family: str
    lam: float
    n: int
    kappa: Optional[int]
    divergence: float
    scaled: float
    bound: float
    limit: float

    def as_row(self):
        return {"family": self.family, "lambda": self.lam, "n": self.n, "kappa": self.kappa,
                "divergence": self.divergence, "scaled": self.scaled, "bound": self.bound,
                "limit": self.limit}


@dataclass
class RateResult:
    rows: list
    kappa: Optional[int]
    c: Optional[float]
    extrapolated: float
    slope: float
    n0: Optional[int]
    closed_form: bool
    csv: str = ""

    @property
    def holds(self):
        """Runtime check: every row from ``n0`` on has ``scaled >= bound``."""
        if self.c is None or self.c > 0:
            return True
        return self.n0 is not None

    def summary(self):
        return {"kappa": self.kappa, "c": self.c, "extrapolated_limit": self.extrapolated,
                "slope": self.slope, "n0": self.n0, "closed_form": self.closed_form,
                "bound_holds": self.holds}


def richardson(ns, values):
    """Least-squares fit ``values = a + b / n``; returns ``(a, b)``."""
    ns = np.asarray(ns, dtype=float)
    A = np.column_stack([np.ones_like(ns), 1.0 / ns])
    (a, b), *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    return float(a), float(b)


def binomial_poisson_logratio(n, lam):
    """``x -> log(Bi(n, lam/n)(x) / Po(lam)(x))`` without forming either pmf.

    The ratio is ``prod_{i<x}(1 - i/n) (1 - lam/n)^(n-x) e^lam``, so each
    factor goes through ``log1p``.
    """
    n = int(n)
    l1 = math.log1p(-lam / n)

    def fn(x):
        x = np.asarray(x, dtype=np.int64)
        top = int(x.max()) if x.size else 0
        c = np.concatenate(([0.0], np.cumsum(np.log1p(-np.arange(top) / n))))
        return c[x] + (n - x) * l1 + lam
    return fn


def binomial_poisson_kl(n, lam, eps_trunc=DEFAULT_EPS):
    """``D(Bi(n, lam/n) || Po(lam))`` through the analytic log ratio."""
    B = make_distribution(FamilySpec.binomial(int(n), lam / n), eps_trunc)
    return math.fsum((B.pmf * binomial_poisson_logratio(n, lam)(B.support)).tolist())


def _gate(cfg, ns=(1, 2, 3, 4)):
    """Compare the closed-form laws with the convolution pipeline at small n."""
    worst = 0.0
    if cfg.family_name == "binomial":
        m = max(1, math.ceil(cfg.lam))
        for n in range(m, m + len(ns)):
            fast = make_distribution(FamilySpec.binomial(n, cfg.lam / n), cfg.eps_trunc)
            slow = convolve_pow(make_distribution(FamilySpec.bernoulli(cfg.lam / n), cfg.eps_trunc), n)
            worst = max(worst, tv(fast, slow))
    else:
        X = make_distribution(cfg.family, cfg.eps_trunc)
        for n in ns:
            worst = max(worst, tv(thin_law(X, n, True), thin_law(X, n, False)))
    return worst <= GATE_TV, worst


def run_rate_experiment(cfg):
    """Scaled divergences ``n^(2 kappa - 2) D(law_n || Po(lam))`` along ``cfg.n_grid``.

    ``bound`` is ``n^(2 kappa - 2) E[C_kappa(law_n)]^2 / 2`` and ``limit`` is
    ``E[C_kappa(X)]^2 / 2`` (``lam^2/4`` on the binomial route). ``n0`` is the
    first grid point from which ``scaled >= bound`` holds to the end of the grid.
    """
    lam = float(cfg.lam)
    closed, _ = _gate(cfg)
    binomial = cfg.family_name == "binomial"
    basis = CharlierBasis(lam, 12)
    po = make_distribution(FamilySpec.poisson(lam), cfg.eps_trunc)
    if binomial:
        kappa, c = 2, None
    else:
        X = make_distribution(cfg.family, cfg.eps_trunc)
        if cfg.kappa is not None:
            kappa = int(cfg.kappa)
            c = charlier_moment(X, basis, kappa)
        else:
            # X equal to Po(lam) up to truncation has no kappa; its rows are all zero
            rep = detect_kappa(X, basis) if kl(X, po) > POISSON_KL else None
            kappa, c = (rep.kappa, rep.c) if rep is not None else (None, None)
            if rep is not None and kappa is None:
                raise UnsupportedError(f"no nonzero Charlier moment detected for {cfg.family.kind}")
    rows = []
    for n in cfg.n_grid:
        if binomial:
            law = make_distribution(FamilySpec.binomial(n, lam / n), cfg.eps_trunc)
            D = binomial_poisson_kl(n, lam, cfg.eps_trunc) if closed else kl(
                convolve_pow(make_distribution(FamilySpec.bernoulli(lam / n), cfg.eps_trunc), n), po)
        else:
            law = thin_law(X, n, closed_form=closed)
            D = kl(law, po)
        D = max(D, 0.0)
        if kappa is None:
            rows.append(RateRow(cfg.family_name, lam, n, None, D, D, 0.0, 0.0))
            continue
        scale = float(n) ** (2 * kappa - 2)
        mk = charlier_moment(law, basis, kappa)
        limit = lam ** 2 / 4.0 if binomial else c * c / 2.0
        rows.append(RateRow(cfg.family_name, lam, n, kappa, D, scale * D, scale * mk * mk / 2.0, limit))
    if binomial:
        c = -lam / math.sqrt(2.0)
    a, b = richardson([r.n for r in rows], [r.scaled for r in rows])
    n0 = None
    for r in reversed(rows):
        if r.scaled >= r.bound:
            n0 = r.n
        else:
            break
    res = RateResult(rows, kappa, c, a, b, n0, closed)
    res.csv = write_csv([r.as_row() for r in rows], RATE_COLUMNS, cfg.csv_path)
    if cfg.json_path:
        Path(cfg.json_path).write_text(json.dumps(res.summary(), indent=2, sort_keys=True))
    return res


@dataclass
class ProjectionRateResult:
    rows: list
    decreasing: bool
    max_slack: float
    csv: str = ""

    @property
    def passed(self):
        return self.decreasing and self.max_slack <= SLACK_TOL


def run_projection_rate(cfg):
    """``n^2 D(Bi(n, lam/n) || Po_beta(lam))`` along the grid.

    The divergence uses the analytic binomial/Poisson log ratio minus the
    tilt log ratio of ``Po_beta``; the generic summation is reported next to
    it. ``poisson_gap`` is ``n^2 (D(Bi||Po) - D(Bi||Po_beta))``, and the
    Pythagorean slack is ``D(Bi||Po) - D(Bi||Po_beta) - D(Po_beta||Po)``.
    """
    lam = float(cfg.lam)
    if not lam < cfg.n_grid[0]:
        raise ParameterError(f"need lam < min(n-grid), got lam={lam}")
    eps = min(cfg.eps_trunc, 1e-30)
    rows = []
    for n in cfg.n_grid:
        res = po_beta(lam, n, eps)
        fam = charlier_family(lam, (1, 2), eps, respect_domain=False)
        g = tilt_logratio(fam, res.beta)
        B = make_distribution(FamilySpec.binomial(n, lam / n), eps)
        l_bp = binomial_poisson_logratio(n, lam)(B.support)
        D_bp = math.fsum((B.pmf * l_bp).tolist())
        D = max(math.fsum((B.pmf * (l_bp - g(B.support))).tolist()), 0.0)
        generic = kl(B, res.distribution)
        rows.append({"lambda": lam, "n": n, "divergence": D, "scaled": n * n * D,
                     "generic_scaled": n * n * generic, "poisson_gap": n * n * (D_bp - D),
                     "pythagorean_slack": D_bp - D - res.divergence})
    scaled = [r["scaled"] for r in rows]
    out = ProjectionRateResult(rows, all(b < a for a, b in zip(scaled, scaled[1:])),
                               max(abs(r["pythagorean_slack"]) for r in rows))
    out.csv = write_csv(rows, PROJRATE_COLUMNS, cfg.csv_path)
    if cfg.json_path:
        Path(cfg.json_path).write_text(json.dumps({"rows": rows, "decreasing": out.decreasing,
                                                   "max_slack": out.max_slack}, indent=2))
    return out


# --- verification suites ---------------------------------------------------------------

@dataclass
class VerifyOptions:
    grid_step: Optional[float] = None
    seed: int = 42
    trials: int = 10_000
    out_dir: Optional[str] = None
    prefix: str = "verify"
    extra: dict = field(default_factory=dict)


def _suite_beta0(opts):
    b = V.solve_beta0()
    x, fx = V.f_profile(b)
    mv = V.mixed_value(b)
    split = V.case1_split(b)
    resid = abs(b * b * math.exp(b * b) - 1.0)
    R = V.VerificationRecord
    return [
        R("beta0.residual", "defining equation", -resid, b, resid <= 1e-11, 1e-11, {"beta0": b}),
        R("beta0.below", "beta0 < -2^(-1/2)", -2 ** -0.5 - b, b, b < -2 ** -0.5),
        R("beta0.f_max", "f(-2/beta0) < 1", 1.0 - fx, x, fx < 1.0, 0.0, {"value": fx}),
        R("beta0.mixed", "mixed value < 1", 1.0 - mv, V.c2_three_minimum()[1], mv < 1.0, 0.0,
          {"value": mv}),
        R("beta0.split", "min C_2 = beta0 threshold near 3.8444", -abs(split - V.CASE1_SPLIT), split,
          abs(split - V.CASE1_SPLIT) <= 1e-4, 1e-4, {"value": split}),
    ]


def _suite_gaussian(opts):
    recs = []
    r = V.gaussian_bound_audit(V.normal_density(0.0, 0.98), l_max=1)
    D, closed = r.extra["checks"][1]["divergence"], V.gaussian_kl_closed(0.0, 0.98)
    r.name, r.passed = "gaussian.l1", r.passed and abs(D - closed) <= 1e-8
    r.extra["closed_form"] = closed
    recs.append(r)
    r = V.gaussian_bound_audit(V.mixture_density(0.3), l_max=3)
    r.name = "gaussian.mixture"
    r.passed = r.passed and r.extra["checks"][2]["applies"]
    recs.append(r)
    for l in (1, 2, 3):
        val = V.hermite_triple_quadrature(2 * l)
        gh = hermite_triple_moment(2 * l, normalized=True)
        closed = V.hermite_triple_closed(2 * l)
        ok = val > 0 and abs(val - closed) <= 1e-8 * closed and abs(gh - closed) <= 1e-8 * closed
        recs.append(V.VerificationRecord(f"gaussian.triple{2 * l}", "trapezoid and Gauss-Hermite",
                                         val, 2 * l, ok, 0.0, {"gauss_hermite": gh, "closed": closed}))
    return recs


def run_verify_suite(names, opts=None):
    """Run the named suites; returns ``(records, exit_code)`` with 0 iff every record passed."""
    opts = opts or VerifyOptions()
    names = list(SUITES) if "all" in names else list(names)
    for s in names:
        if s not in SUITES:
            raise ConfigError(f"unknown suite {s!r}; choose from {', '.join(SUITES + ('all',))}")
    step = opts.grid_step
    records = []
    for s in names:
        if s == "beta0":
            records += _suite_beta0(opts)
        elif s == "case1":
            records += V.verify_case1(step or 1e-3)
        elif s == "case2":
            recs = V.verify_case2(step or 1e-4)
            if opts.out_dir:
                for r in recs:
                    rows = [dict(zip(("lambda", "lhs", "rhs"), t))
                            for t in zip(*(r.curves[k] for k in ("lambda", "lhs", "rhs")))]
                    write_csv(rows, ("lambda", "lhs", "rhs"),
                              Path(opts.out_dir) / f"{opts.prefix}_{r.name.replace('.', '_')}.csv")
            records += recs
        elif s == "thm12":
            records.append(V.thm12_suite(opts.trials, opts.seed))
        elif s == "thm2":
            records.append(V.thm2_suite(opts.trials, opts.seed + 1))
            records.append(V.jensen_suite(max(opts.trials // 5, 1), opts.seed + 2))
        elif s == "conjecture":
            records.append(V.conjecture_audit(max(opts.trials // 5, 1), opts.seed + 3))
        elif s == "gaussian":
            records += _suite_gaussian(opts)
    code = 0 if all(r.passed for r in records) else 1
    return records, code


RECORD_COLUMNS = ("name", "grid", "margin", "worst_at", "passed", "tolerance")


def records_csv(records, path=None):
    rows = []
    for r in records:
        d = r.to_dict()
        w = d["worst_at"]
        d["worst_at"] = w if isinstance(w, (int, float)) or w is None else "object"
        rows.append(d)
    return write_csv(rows, RECORD_COLUMNS, path)
