"""Numerical verification of the lower-bound inequalities.

Every check produces a :class:`VerificationRecord`: the worst margin
``min(RHS - LHS)`` over a declared grid, where it occurs, and pass/fail
against a tolerance. Records keep the margin function so the worst case can
be re-evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln, xlogy

from .charlier import CharlierBasis, hermite_eval, hermite_normalized_eval
from .dist import DEFAULT_EPS, Distribution, FamilySpec, make_distribution
from .divergence import kl
from .errors import ParameterError, PreconditionError
from .moments import charlier_moment

SQRT2 = math.sqrt(2.0)
CASE1_SPLIT = 3.8444


@dataclass
class VerificationRecord:
    name: str
    grid: str
    margin: float
    worst_at: object
    passed: bool
    tolerance: float = 0.0
    extra: dict = field(default_factory=dict)
    curves: Optional[dict] = None
    margin_fn: Optional[Callable] = field(default=None, repr=False, compare=False)

    def reevaluate(self):
        """Margin recomputed at ``worst_at``; equals ``margin`` for deterministic checks."""
        if self.margin_fn is None:
            raise ParameterError(f"record {self.name} has no margin function")
        return float(self.margin_fn(self.worst_at))

    def to_dict(self):
        def plain(v):
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, dict):
                return {k: plain(u) for k, u in v.items()}
            if isinstance(v, (list, tuple)):
                return [plain(u) for u in v]
            return v
        return {"name": self.name, "grid": self.grid, "margin": float(self.margin),
                "worst_at": plain(self.worst_at), "passed": bool(self.passed),
                "tolerance": self.tolerance, "extra": plain(self.extra)}


def _grid_record(name, fn, grid, desc, tol=0.0, extra=None, curves=None):
    grid = np.asarray(grid, dtype=float)
    margins = np.array([fn(t) for t in grid], dtype=float)
    i = int(np.argmin(margins))
    m = float(margins[i])
    return VerificationRecord(name, desc, m, float(grid[i]), m >= -tol, tol, extra or {},
                              curves, fn)


def _grid(a, b, step):
    n = int(round((b - a) / step))
    return a + step * np.arange(n + 1)


# --- beta_0 and f ----------------------------------------------------------------

def solve_beta0(tol=1e-12):
    """Negative root of ``beta^2 exp(beta^2) = 1`` by bisection on [-1, -1/2]."""
    g = lambda b: b * b * math.exp(b * b) - 1.0
    lo, hi = -1.0, -0.5  # g(lo) > 0 > g(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


BETA0 = solve_beta0(1e-15)


def f_beta0(x, beta0=BETA0):
    """``f(x) = x^2 exp(beta_0 x)``."""
    x = np.asarray(x, dtype=float)
    return x * x * np.exp(beta0 * x)


def f_profile(beta0=BETA0):
    """Location and value of the local maximum of ``f``: ``(-2/beta_0, 4 e^-2 / beta_0^2)``."""
    x = -2.0 / beta0
    return x, 4.0 * math.exp(-2.0) / beta0 ** 2


def c2(lam, x):
    """``C_2^lam(x) = ((x - lam)^2 - x) / (sqrt(2) lam)``."""
    x = np.asarray(x, dtype=float)
    return ((x - lam) ** 2 - x) / (SQRT2 * lam)


def c2_three_minimum():
    """Minimum over ``lam`` of ``C_2^lam(3) = (lam + 6/lam - 6)/sqrt(2)``, at ``lam = sqrt(6)``."""
    lam = math.sqrt(6.0)
    return float(c2(lam, 3.0)), lam


def mixed_value(beta0=BETA0):
    """``f(-2^(-1/2))/2 + f(min C_2(3))/2``, the bound used for ``lam > 2``."""
    return float(0.5 * f_beta0(-1.0 / SQRT2, beta0) + 0.5 * f_beta0(c2_three_minimum()[0], beta0))


def case1_split(beta0=BETA0):
    """Smallest ``lam`` with ``min_x C_2^lam(x) >= beta_0``: ``-2^(-1/2) - 1/(4 sqrt2 lam) = beta_0``."""
    return -1.0 / (4.0 * SQRT2 * (beta0 + 1.0 / SQRT2))


# --- case 1: C_2 bounded below by beta_0 ----------------------------------------

def case1_exact(lam, beta0=BETA0):
    """``(ceil f(C_2(floor)) + lam f(C_2(ceil))) / (ceil + lam)`` for non-integer ``lam``."""
    lo, hi = math.floor(lam), math.ceil(lam)
    f = lambda v: float(f_beta0(v, beta0))
    return (hi * f(c2(lam, lo)) + lam * f(c2(lam, hi))) / (hi + lam)


def case1_bound_small(lam, beta0=BETA0):
    """Upper bound on the exact expression for ``lam`` in (0, 1)."""
    return ((lam ** 2 + (lam - 2) ** 2 * lam * math.exp(-beta0 * SQRT2))
            / (2 * (1 + lam) * (1 - beta0 * lam / SQRT2)))


def case1_bound_mid(lam, beta0=BETA0):
    """Upper bound on the exact expression for ``lam`` in (1, 2).

    The first exponential bounds ``exp(beta_0 (lam-2)/sqrt2)`` by its value at
    ``lam = 1``, i.e. ``exp(-beta_0 / sqrt2)``; the second uses
    ``exp(beta_0 (2 - 2^(3/2)))``, which dominates the sharper
    ``exp(beta_0 (2 - 2^(3/2)) / sqrt2)``.
    """
    q = (lam ** 2 - 4 * lam + 2) ** 2 / (2 * lam)
    return ((lam - 2) ** 2 * math.exp(-beta0 / SQRT2)
            + q * math.exp(beta0 * (2 - 2 ** 1.5))) / (2 + lam)


def verify_case1(step=1e-3, upper=10.0, beta0=BETA0):
    """Three records, one per sub-case; margins are ``1 - value``."""
    records = []

    grid = _grid(0.0, 1.0, step)[1:]
    bound = np.array([case1_bound_small(t, beta0) for t in grid])
    exact = np.array([case1_exact(t, beta0) for t in grid[grid < 1.0]])
    i = int(np.argmax(bound))
    rising = np.nonzero(np.diff(bound) < 0)[0]
    rec = _grid_record("case1.lambda<1", lambda t: 1.0 - case1_bound_small(t, beta0), grid,
                       f"lambda in (0, 1], step {step:g}", extra={
                           "max_value": float(bound[i]), "argmax": float(grid[i]),
                           "increasing_until": float(grid[rising[0]]) if rising.size else None,
                           "exact_max": float(exact.max()),
                           "bound_dominates_exact": bool(np.all(exact <= bound[:exact.size] + 1e-15))})
    rec.passed = rec.passed and rec.extra["bound_dominates_exact"]
    records.append(rec)

    grid = _grid(1.0, 2.0, step)
    bound = np.array([case1_bound_mid(t, beta0) for t in grid])
    inner = grid[(grid > 1.0) & (grid < 2.0)]
    exact = np.array([case1_exact(t, beta0) for t in inner])
    dominated = bool(np.all(exact <= np.array([case1_bound_mid(t, beta0) for t in inner]) + 1e-15))
    rec = _grid_record("case1.1<lambda<2", lambda t: 1.0 - case1_bound_mid(t, beta0), grid,
                       f"lambda in [1, 2], step {step:g}", extra={
                           "value_at_1": float(bound[0]), "decreasing": bool(np.all(np.diff(bound) < 0)),
                           "exact_max": float(exact.max()), "bound_dominates_exact": dominated})
    rec.passed = rec.passed and dominated and rec.extra["decreasing"]
    records.append(rec)

    grid = _grid(2.0, upper, step)
    grid = grid[np.abs(grid - np.round(grid)) > 1e-9]
    mv = mixed_value(beta0)
    exact = np.array([case1_exact(t, beta0) for t in grid])
    rec = _grid_record("case1.lambda>2", lambda t: 1.0 - case1_exact(t, beta0), grid,
                       f"non-integer lambda in (2, {upper:g}], step {step:g}", extra={
                           "mixed_value": mv, "exact_max": float(exact.max()),
                           "exact_below_mixed_value": bool(np.all(exact <= mv)),
                           "c2_three_minimum": c2_three_minimum()[0]})
    rec.passed = rec.passed and rec.extra["exact_below_mixed_value"]
    records.append(rec)
    return records


# --- case 2: C_2 dips below beta_0 -------------------------------------------------

def ceiling(lam, beta0=BETA0):
    """(lhs, rhs) of ``2(1/2 + sqrt(lam(-beta_0 sqrt2 - 1)) - 1/e) >= |C_2(ceil lam)|``."""
    lhs = 2.0 * (0.5 + math.sqrt(lam * (-beta0 * SQRT2 - 1.0)) - math.exp(-1.0))
    rhs = abs(float(c2(lam, math.ceil(lam))))
    return lhs, rhs


def small_lambda(lam):
    """(lhs, rhs) of ``sqrt2 lam e^-lam - lam/2 <= (sqrt2 - 1)/2``."""
    return SQRT2 * lam * math.exp(-lam) - lam / 2.0, (SQRT2 - 1.0) / 2.0


def near_one(lam, beta0=BETA0):
    """(lhs, rhs) of the inequality for ``lam`` in [1/2, 1); the right side diverges at 1."""
    lhs = (lam ** 2 - 4 * lam + 2) / (SQRT2 * lam) + 2 * lam * math.exp(-lam)
    rhs = ((2 - (2 * lam - 2) / (SQRT2 * lam))
           * (beta0 * SQRT2 * lam - lam ** 2 + 4 * lam - 2) / (2 * lam - 2))
    return lhs, rhs


def verify_case2(step=1e-4, beta0=BETA0):
    """Records for the three case-2 inequalities with their (lambda, lhs, rhs) curves."""
    specs = [
        ("case2.ceiling", _grid(1.0, 4.0, step), lambda t: ceiling(t, beta0),
         lambda l, r: l - r, "lambda in [1, 4]"),
        ("case2.small_lambda", _grid(0.0, 0.5, step), small_lambda,
         lambda l, r: r - l, "lambda in [0, 1/2]"),
        ("case2.near_one", _grid(0.5, 1.0, step)[:-1], lambda t: near_one(t, beta0),
         lambda l, r: r - l, "lambda in [1/2, 1), the singular endpoint 1 excluded"),
    ]
    records = []
    for name, grid, pair, margin, desc in specs:
        vals = np.array([pair(t) for t in grid])
        fn = (lambda t, pair=pair, margin=margin: margin(*pair(t)))
        curves = {"lambda": grid, "lhs": vals[:, 0], "rhs": vals[:, 1]}
        rec = _grid_record(name, fn, grid, f"{desc}, step {step:g}", curves=curves)
        rec.passed = rec.margin > 0
        records.append(rec)
    return records


# --- lower bounds on random distributions ------------------------------------------

def poisson_logpmf(lam, x):
    x = np.asarray(x, dtype=float)
    return xlogy(x, lam) - lam - gammaln(x + 1.0)


def kl_to_poisson(pmf, lam, offset=0):
    """``D(P || Po(lam))`` for a pmf array, with ``0 log 0 = 0``."""
    p = np.asarray(pmf, dtype=float)
    x = offset + np.arange(p.size)
    pos = p > 0
    return math.fsum((p[pos] * (np.log(p[pos]) - poisson_logpmf(lam, x[pos]))).tolist())


def lower_bound_audit(P, lam, k_max=6, tol=1e-12):
    """Check ``D(P || Po(lam)) >= E[C_k]^2 / 2`` for every ``k <= k_max`` with ``E[C_k] <= 0``.

    Only ``k = 2`` is proven and decides pass/fail; the other degrees are
    listed in ``extra["candidates"]`` when they fail.
    """
    basis = CharlierBasis(lam, max(k_max, 2))
    D = kl(P, make_distribution(FamilySpec.poisson(lam)))
    per_k, candidates = {}, []
    for k in range(1, k_max + 1):
        m = charlier_moment(P, basis, k)
        if m > 0:
            continue
        margin = D - 0.5 * m * m
        per_k[k] = {"moment": m, "bound": 0.5 * m * m, "margin": margin}
        if margin < -tol and k != 2:
            candidates.append({"k": k, "lambda": lam, "offset": P.offset, "pmf": P.pmf.tolist(),
                               "divergence": D, "moment": m})
    m2 = per_k.get(2, {}).get("margin", math.inf)
    rec = VerificationRecord("lower_bound", f"k in 1..{k_max}, lambda={lam}", m2, 2,
                             m2 >= -tol, tol, {"divergence": D, "per_k": per_k,
                                               "candidates": candidates})
    return rec


def thm2_variance_bound(P, lam, tol=1e-9):
    """``2 sqrt(D(P || Po(lam))) >= 1 - Var/lam`` for ``P`` with mean ``lam``."""
    mean, var = P.mean(), P.variance()
    if abs(mean - lam) > tol * max(1.0, lam):
        raise PreconditionError(f"mean {mean} differs from lambda {lam}")
    D = kl(P, make_distribution(FamilySpec.poisson(lam)))
    margin = 2.0 * math.sqrt(max(D, 0.0)) - (1.0 - var / lam)
    return VerificationRecord("thm2", f"lambda={lam}", margin, lam, margin >= -1e-12, 1e-12,
                              {"divergence": D, "variance": var})


def random_pmfs(rng, count, max_width=40):
    """Random pmfs on windows inside {0..max_width}, drawn from a mix of generators.

    Symmetric Dirichlet over a full window, Dirichlet over a short shifted
    window (under-dispersed), and Dirichlet-perturbed binomials. Returns a
    list of (offset, pmf) pairs.
    """
    out = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            m = int(rng.integers(1, max_width + 1))
            p = rng.dirichlet(np.full(m + 1, float(rng.choice([0.2, 0.5, 1.0, 3.0]))))
            off = 0
        elif kind == 1:
            w = int(rng.integers(1, 6))
            off = int(rng.integers(0, max_width - w + 1))
            p = rng.dirichlet(np.full(w + 1, float(rng.choice([0.5, 1.0, 5.0]))))
        else:
            m = int(rng.integers(1, max_width + 1))
            x = np.arange(m + 1)
            q = float(rng.uniform(0.02, 0.98))
            b = np.exp(gammaln(m + 1) - gammaln(x + 1) - gammaln(m - x + 1)
                       + xlogy(x, q) + xlogy(m - x, 1 - q))
            eps = float(rng.choice([0.0, 1e-3, 0.05]))
            p = (1 - eps) * b + eps * rng.dirichlet(np.ones(m + 1))
            off = 0
        p = p / p.sum()
        out.append((off, p))
    return out


def _moments(off, p):
    x = off + np.arange(p.size, dtype=float)
    mean = float(np.dot(x, p))
    var = float(np.dot((x - mean) ** 2, p))
    return x, mean, var


def thm12_suite(trials=10_000, seed=42, max_width=40, tol=1e-12):
    """Property test of ``D >= E[C_2]^2/2`` over random pmfs with ``E[C_2] <= 0``.

    Half of the draws use ``lam`` = the mean, the other half an independent
    ``lam``; draws with positive moment are skipped until ``trials`` qualify.
    """
    rng = np.random.default_rng(seed)
    done, drawn, worst, worst_case, violations = 0, 0, math.inf, None, []
    while done < trials:
        for off, p in random_pmfs(rng, 2 * trials, max_width):
            x, mean, _ = _moments(off, p)
            lam = mean if drawn % 2 == 0 else float(rng.uniform(0.05, max_width / 2))
            drawn += 1
            if lam <= 0:
                continue
            m = float(np.dot(c2(lam, x), p))
            if m > 0:
                continue
            D = kl_to_poisson(p, lam, off)
            margin = D - 0.5 * m * m
            if margin < worst:
                worst, worst_case = margin, {"lambda": lam, "offset": off, "pmf": p.tolist()}
            if margin < -tol:
                violations.append(worst_case)
            done += 1
            if done == trials:
                break
    return VerificationRecord("thm12", f"{trials} random pmfs on windows in 0..{max_width}, seed {seed}",
                              worst, worst_case, not violations, tol,
                              {"violations": len(violations), "drawn": drawn})


def thm2_suite(trials=10_000, seed=43, max_width=40, tol=1e-12):
    """Property test of ``2 sqrt(D) >= 1 - Var/lam`` with ``lam`` = the mean."""
    rng = np.random.default_rng(seed)
    worst, worst_case, violations = math.inf, None, 0
    for off, p in random_pmfs(rng, trials, max_width):
        x, mean, var = _moments(off, p)
        if mean <= 0:
            continue
        D = kl_to_poisson(p, mean, off)
        margin = 2.0 * math.sqrt(max(D, 0.0)) - (1.0 - var / mean)
        if margin < worst:
            worst, worst_case = margin, {"lambda": mean, "offset": off, "pmf": p.tolist()}
        violations += margin < -tol
    return VerificationRecord("thm2", f"{trials} random mean-lambda pmfs, seed {seed}", worst,
                              worst_case, violations == 0, tol, {"violations": int(violations)})


def jensen_suite(trials=2000, seed=44, max_width=40):
    """``E[C_2(X)] >= C_2(E[X])`` on random pmfs (convexity of ``C_2``)."""
    rng = np.random.default_rng(seed)
    worst, where = math.inf, None
    for off, p in random_pmfs(rng, trials, max_width):
        x, mean, _ = _moments(off, p)
        lam = float(rng.uniform(0.1, max_width / 2))
        margin = float(np.dot(c2(lam, x), p) - c2(lam, mean))
        if margin < worst:
            worst, where = margin, {"lambda": lam, "offset": off}
    return VerificationRecord("jensen", f"{trials} random pmfs, seed {seed}", worst, where,
                              worst >= -1e-12, 1e-12)


def conjecture_audit(trials=2000, seed=45, k_values=(1, 3, 4, 5, 6), windows=(5, 40), tol=1e-12):
    """Falsification search for ``D >= E[C_k]^2/2`` when ``E[C_k] <= 0``, ``k != 2``.

    Symmetric Dirichlet pmfs on ``{0..m}`` with ``m`` drawn from ``windows``.
    Violations are returned as candidates; the record passes regardless, since
    the statement is a conjecture.
    """
    rng = np.random.default_rng(seed)
    bases = {}
    candidates, checked, worst = [], 0, {}
    for _ in range(trials):
        m = int(rng.integers(windows[0], windows[1] + 1))
        p = rng.dirichlet(np.full(m + 1, float(rng.choice([0.3, 1.0, 3.0]))))
        x = np.arange(m + 1)
        lam = float(np.dot(x, p)) if rng.random() < 0.5 else float(rng.uniform(0.2, m / 2 + 0.5))
        if lam <= 0:
            continue
        key = round(lam, 12)
        basis = bases.get(key) or CharlierBasis(lam, max(k_values))
        D = kl_to_poisson(p, lam)
        for k in k_values:
            mk = float(np.dot(basis.eval(k, x), p))
            if mk > 0:
                continue
            checked += 1
            margin = D - 0.5 * mk * mk
            if margin < worst.get(k, math.inf):
                worst[k] = margin
            if margin < -tol:
                candidates.append({"k": k, "lambda": lam, "pmf": p.tolist(), "divergence": D,
                                   "moment": mk})
    overall = min(worst.values()) if worst else math.inf
    return VerificationRecord("conjecture", f"{trials} Dirichlet pmfs on 0..m, m in {windows}, seed {seed}",
                              overall, None, True, tol,
                              {"checked": checked, "worst_by_k": worst, "candidates": candidates})


def epsilon_scan(k, lam, h_max=2.0, points=200):
    """Largest ``eps`` on a grid such that the projection onto ``E[C_k] = h`` keeps
    ``D >= h^2/2`` for all ``h`` in ``[-eps, 0)``.

    The projection is the divergence minimizer under the constraint, so this
    is the empirical ``eps`` of the local result for ``(k, lam)``.
    """
    from .expfam import charlier_family, project_one

    fam = charlier_family(lam, (k,))
    lo = float(fam.stat_range()[0][0])
    hs = -np.linspace(h_max / points, min(h_max, 0.999 * abs(lo)), points)
    eps, first_bad, margins = 0.0, None, []
    for h in hs:
        D = project_one(lam, k, float(h)).divergence
        margin = D - 0.5 * h * h
        margins.append(margin)
        if margin < -1e-12:
            first_bad = float(h)
            break
        eps = float(-h)
    return {"k": k, "lambda": lam, "epsilon": eps, "first_violation": first_bad,
            "scanned_to": float(-hs[-1]), "min_margin": float(min(margins))}


# --- Gaussian analogue ---------------------------------------------------------------

QUAD_RANGE = 12.0
QUAD_POINTS = 201


def std_normal_logpdf(x):
    return -0.5 * np.asarray(x) ** 2 - 0.5 * math.log(2 * math.pi)


def _trapezoid(fn, points):
    x = np.linspace(-QUAD_RANGE, QUAD_RANGE, points)
    return np.trapezoid(fn(x), x)


def adaptive_trapezoid(fn, rtol=1e-12, atol=1e-15, max_points=2 ** 20 + 1):
    """Trapezoid rule on [-12, 12] from 201 points, doubling until successive values agree."""
    points = QUAD_POINTS
    prev = _trapezoid(fn, points)
    while points < max_points:
        points = 2 * points - 1
        cur = _trapezoid(fn, points)
        if abs(cur - prev) <= max(atol, rtol * abs(cur)):
            return float(cur)
        prev = cur
    return float(prev)


def gaussian_kl_closed(mu, var):
    """``D(N(mu, var) || N(0, 1)) = (var + mu^2 - 1 - ln var) / 2``."""
    return 0.5 * (var + mu * mu - 1.0 - math.log(var))


def mixture_density(a):
    """Density of ``N(-a, 1-a^2)/2 + N(a, 1-a^2)/2`` (mean 0, variance 1)."""
    s2 = 1.0 - a * a

    def pdf(x):
        x = np.asarray(x, dtype=float)
        c = 1.0 / math.sqrt(2 * math.pi * s2)
        return 0.5 * c * (np.exp(-(x - a) ** 2 / (2 * s2)) + np.exp(-(x + a) ** 2 / (2 * s2)))
    return pdf


def normal_density(mu, var):
    def pdf(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(x - mu) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)
    return pdf


def hermite_triple_closed(order, normalized=True):
    """``E[He_n(Z)^3]`` for even ``n = 2l``: ``(2l)!^3 / l!^3`` (divided by ``(2l)!^(3/2)`` if normalized)."""
    if order % 2:
        return 0.0
    l = order // 2
    v = factorial(order) ** 3 / factorial(l) ** 3
    return v / factorial(order) ** 1.5 if normalized else float(v)


def gaussian_bound_audit(density, l_max=3, small=0.5, tol=1e-8):
    """Lower bounds on ``D(X || N(0, 1))`` from even Hermite moments, by quadrature.

    Hermite moments use the orthonormal ``He_n / sqrt(n!)``. The first-order
    check ``D(X || N(mean, 1)) >= (Var - 1)^2/4`` needs only unit mass and
    applies when ``Var <= 1``; the higher orders require mean 0 and variance 1
    and are applied when the moment lies in ``[-small, 0]``.
    """
    mass = adaptive_trapezoid(density)
    if abs(mass - 1.0) > tol:
        raise PreconditionError(f"density integrates to {mass}, not 1")
    mean = adaptive_trapezoid(lambda x: x * density(x))
    var = adaptive_trapezoid(lambda x: (x - mean) ** 2 * density(x))

    def kl_term(mu):
        def g(x):
            p = density(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = p * (np.log(p) - std_normal_logpdf(x - mu))
            return np.where(p > 0, t, 0.0)
        return g

    D_shift = max(adaptive_trapezoid(kl_term(mean)), 0.0)
    checks = {1: {"moment": (var - 1.0) / SQRT2, "divergence": D_shift,
                  "bound": (var - 1.0) ** 2 / 4.0, "margin": D_shift - (var - 1.0) ** 2 / 4.0,
                  "applies": var <= 1.0 + tol}}
    standard = abs(mean) <= tol and abs(var - 1.0) <= tol
    D = max(adaptive_trapezoid(kl_term(0.0)), 0.0)
    for l in range(2, l_max + 1):
        if not standard:
            break
        n = 2 * l
        mom = adaptive_trapezoid(lambda x, n=n: hermite_normalized_eval(n, x) * density(x))
        entry = {"moment": mom, "divergence": D, "bound": 0.5 * mom * mom,
                 "margin": D - 0.5 * mom * mom, "applies": -small <= mom <= 0.0}
        checks[l] = entry
    applied = [c["margin"] for c in checks.values() if c["applies"]]
    margin = min(applied) if applied else math.inf
    return VerificationRecord("gaussian", f"trapezoid on [-{QUAD_RANGE:g}, {QUAD_RANGE:g}], l <= {l_max}",
                              margin, None, margin >= -1e-12, 1e-12,
                              {"mass": mass, "mean": mean, "variance": var, "divergence": D,
                               "standardized": standard, "checks": checks})


def hermite_triple_quadrature(order, normalized=True):
    """``E[H_n(Z)^3]`` by trapezoid quadrature against the standard normal density."""
    h = hermite_normalized_eval if normalized else hermite_eval
    pdf = normal_density(0.0, 1.0)
    return adaptive_trapezoid(lambda x: h(order, x) ** 3 * pdf(x))
