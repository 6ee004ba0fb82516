"""Exponential tilting, partition functions and minimum-information projections.

A family tilts a base distribution ``Q0`` by a (vector) statistic ``T``:
``q_beta(x) = q0(x) exp(beta . T(x)) / Z(beta)``. Everything is computed on
a finite window (by default the stored window of ``Q0``), normalized so that
``Z(0) = 1`` exactly.

Projections of ``Po(lam)`` onto Charlier moment constraints solve the convex
dual ``max_beta beta . h - ln Z(beta)``; its gradient is ``h - E_beta[T]``
and its Hessian ``-Cov_beta(T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar
from scipy.special import logsumexp

from .charlier import CharlierBasis
from .dist import DEFAULT_EPS, Distribution, FamilySpec, family_logpmf, make_distribution
from .divergence import kl
from .errors import (ConvergenceError, DomainError, InfeasibleError, NonexistenceError,
                     ParameterError, RangeError)

LOG_MAX = 700.0
NEWTON_TOL = 1e-10
MAX_ITER = 100


class ExpFamily:
    """Exponential family generated by ``base`` and one or more statistics.

    ``statistics`` maps an integer array to a real array (or is a sequence of
    such maps). ``beta_max`` is the natural-domain hint per coordinate, e.g.
    ``0`` for a Charlier polynomial of degree >= 2 under a Poisson base.
    ``window=(lo, hi)`` widens the working support beyond the stored window
    of ``base``, using its exact log-pmf there.
    """

    def __init__(self, base, statistics, beta_max=None, names=None, window=None):
        if callable(statistics):
            statistics = (statistics,)
        self.base = base
        self.statistics = tuple(statistics)
        self.dim = len(self.statistics)
        if beta_max is None:
            beta_max = (math.inf,) * self.dim
        self.beta_max = tuple(float(b) for b in beta_max)
        if len(self.beta_max) != self.dim:
            raise ParameterError("beta_max must have one entry per statistic")
        self.names = tuple(names) if names else tuple(f"T{i + 1}" for i in range(self.dim))
        if window is None:
            x = base.support
            with np.errstate(divide="ignore"):
                self.logq0 = np.log(np.asarray(base.pmf))
        else:
            x = np.arange(int(window[0]), int(window[1]) + 1)
            self.logq0 = np.asarray(base.logpmf_at(x), dtype=float)
        self.support = x
        self.T = np.vstack([np.asarray(s(x), dtype=float) for s in self.statistics])
        self.T.setflags(write=False)
        self.lognorm = float(logsumexp(self.logq0))
        self.w0 = np.exp(self.logq0 - self.lognorm)

    def __repr__(self):
        return f"ExpFamily(base={self.base.label!r}, statistics={self.names})"

    def stat_range(self):
        """Per-coordinate (min, max) of the statistic over the window."""
        return self.T.min(axis=1), self.T.max(axis=1)


def _beta(fam, beta):
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    if b.shape != (fam.dim,):
        raise ParameterError(f"beta must have {fam.dim} components, got shape {b.shape}")
    return b


def _logw(fam, beta):
    return fam.logq0 + _beta(fam, beta) @ fam.T


def log_partition(fam, beta):
    """``ln Z(beta)``, relative to the window mass of the base.

    For small tilts ``ln Z = log1p(sum w0 expm1(beta . T))`` keeps full
    relative accuracy, which matters when Z - 1 is near 1e-15.
    """
    bt = _beta(fam, beta) @ fam.T
    if np.max(np.abs(bt)) < 0.5:
        return math.log1p(math.fsum((fam.w0 * np.expm1(bt)).tolist()))
    with np.errstate(over="ignore", invalid="ignore"):
        lz = float(logsumexp(fam.logq0 + bt) - fam.lognorm)
    if not math.isfinite(lz):
        raise RangeError(f"ln Z is not finite at beta={beta}", safe_limit=_safe_beta(fam, beta))
    return lz


def _safe_beta(fam, beta):
    b = _beta(fam, beta)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        with np.errstate(over="ignore", invalid="ignore"):
            v = logsumexp(fam.logq0 + (mid * b) @ fam.T) - fam.lognorm
        if math.isfinite(v) and v <= LOG_MAX:
            lo = mid
        else:
            hi = mid
    return lo * b


def partition(fam, beta):
    """``Z(beta) = sum exp(beta . T(x)) q0(x)``; RangeError past ``exp(700)``."""
    lz = log_partition(fam, beta)
    if lz > LOG_MAX:
        raise RangeError(f"Z overflows at beta={beta}", safe_limit=_safe_beta(fam, beta))
    return math.exp(lz)


def _weights(fam, beta):
    lw = _logw(fam, beta)
    return np.exp(lw - logsumexp(lw))


def tilted_moments(fam, beta):
    """Mean vector and covariance matrix of ``T`` under the tilted member."""
    w = _weights(fam, beta)
    mean = fam.T @ w
    c = fam.T - mean[:, None]
    cov = (c * w) @ c.T
    return mean, cov


def tilted_mean(fam, beta):
    return tilted_moments(fam, beta)[0]


def tilt(fam, beta):
    """The member ``Q_beta`` as a Distribution, with a log-pmf valid on all of N0."""
    b = _beta(fam, beta)
    lw = _logw(fam, b)
    lz_abs = float(logsumexp(lw))
    pmf = np.exp(lw - lz_abs)
    nz = np.nonzero(pmf > 0)[0]
    offset = int(fam.support[0]) + int(nz[0])
    pmf = pmf[nz[0]:nz[-1] + 1]
    base, stats = fam.base, fam.statistics

    def logpmf(x):
        x = np.asarray(x)
        t = np.vstack([np.asarray(s(x), dtype=float) for s in stats])
        return base.logpmf_at(x) + b @ t - lz_abs

    label = f"tilt({base.label}, beta={np.array2string(b, precision=6)})"
    return Distribution(offset, pmf, 0.0, label=label, eps_trunc=base.eps_trunc, logpmf_fn=logpmf)


def tilt_logratio(fam, beta):
    """``x -> log(q_beta(x) / q0(x))`` on all of N0, against the untruncated base log-pmf.

    Equals ``beta . T(x) - ln Z(beta) - ln m`` with ``m`` the base mass on the window.
    """
    b = _beta(fam, beta)
    lz = log_partition(fam, b) + fam.lognorm
    stats = fam.statistics

    def fn(x):
        x = np.asarray(x)
        t = np.vstack([np.asarray(s(x), dtype=float) for s in stats])
        return b @ t - lz
    return fn


def solve_beta_for_mean(fam, t, respect_domain=True, tol=1e-12):
    """Natural parameter whose tilted mean of the (scalar) statistic equals ``t``.

    Newton steps with the tilted variance as derivative, safeguarded by a
    bisection bracket. With ``respect_domain`` the search stays below the
    family's ``beta_max``.
    """
    if fam.dim != 1:
        raise ParameterError("solve_beta_for_mean needs a one-dimensional statistic")
    t = float(t)
    tmin, tmax = (float(v[0]) for v in fam.stat_range())
    bmax = fam.beta_max[0] if respect_domain else math.inf
    upper = tmax if math.isinf(bmax) else float(tilted_mean(fam, [bmax])[0])
    closed_top = not math.isinf(bmax)
    if not (tmin < t < upper or (closed_top and t == upper)):
        raise InfeasibleError(f"target {t} outside achievable mean range ({tmin}, {upper})",
                              interval=(tmin, upper))
    scale = max(1.0, abs(t))

    def resid(b):
        m, c = tilted_moments(fam, [b])
        return m[0] - t, c[0, 0]

    r0, _ = resid(0.0) if 0.0 <= bmax else resid(bmax)
    start = 0.0 if 0.0 <= bmax else bmax
    if abs(r0) <= tol * scale:
        return start
    # bracket the root; mean is increasing in beta
    if r0 < 0:
        lo, hi, step = start, None, 1.0
        while hi is None:
            cand = min(start + step, bmax)
            if resid(cand)[0] >= 0:
                hi = cand
            elif cand == bmax:
                return bmax
            else:
                lo, step = cand, 2 * step
            if step > 1e12:
                raise ConvergenceError("failed to bracket the natural parameter", last_iterate=lo)
    else:
        lo, hi, step = None, start, 1.0
        while lo is None:
            cand = start - step
            if resid(cand)[0] <= 0:
                lo = cand
            else:
                hi, step = cand, 2 * step
            if step > 1e12:
                raise ConvergenceError("failed to bracket the natural parameter", last_iterate=hi)
    b = 0.5 * (lo + hi)
    for _ in range(400):
        r, v = resid(b)
        if abs(r) <= tol * scale:
            return b
        if r < 0:
            lo = b
        else:
            hi = b
        nb = b - r / v if v > 0 else math.nan
        if not lo < nb < hi:
            nb = 0.5 * (lo + hi)
        if nb == b or hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(b)):
            return nb
        b = nb
    raise ConvergenceError("Newton/bisection did not converge", last_iterate=b, residual=r)


@dataclass
class ProjectionResult:
    """Minimum-information member satisfying moment constraints."""

    distribution: Distribution
    beta: np.ndarray
    statistics: tuple
    targets: np.ndarray
    achieved: np.ndarray
    divergence: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "statistics": list(self.statistics),
            "beta": [float(v) for v in self.beta],
            "targets": [float(v) for v in self.targets],
            "achieved": [float(v) for v in self.achieved],
            "divergence": float(self.divergence),
            "diagnostics": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                            for k, v in self.diagnostics.items()},
            "distribution": self.distribution.to_dict(explicit=True),
        }


def poisson_base(lam, degrees=(), eps_trunc=DEFAULT_EPS):
    """Truncated ``Po(lam)`` whose window also holds the minimizer of each ``C_k``."""
    spec = FamilySpec.poisson(lam)
    P = make_distribution(spec, eps_trunc)
    if not degrees:
        return P
    kmax = max(degrees)
    basis = CharlierBasis(lam, max(kmax, 1))
    reach = int(math.ceil(lam + 2 * kmax * (math.sqrt(lam) + 1))) + 1
    x = np.arange(reach + 1)
    need = [int(x[np.argmin(basis.eval(k, x))]) for k in degrees]
    lo, hi = min([P.offset] + need), max([P.stop - 1] + need)
    if lo == P.offset and hi == P.stop - 1:
        return P
    xs = np.arange(lo, hi + 1)
    pmf = np.exp(family_logpmf(spec)(xs))
    added = math.fsum(pmf.tolist()) - math.fsum(P.pmf.tolist())
    return Distribution(lo, pmf, max(P.tail_mass - added, 0.0), label=P.label, family=spec,
                        eps_trunc=eps_trunc, logpmf_fn=P.logpmf_fn)


def charlier_family(lam, degrees, eps_trunc=DEFAULT_EPS, respect_domain=True):
    """Tilts of ``Po(lam)`` by ``C_k^lam`` for the given degrees."""
    degrees = tuple(int(k) for k in degrees)
    if any(k < 1 for k in degrees):
        raise ParameterError(f"Charlier degrees must be >= 1, got {degrees}")
    basis = CharlierBasis(lam, max(max(degrees), 1))
    base = poisson_base(lam, degrees, eps_trunc)
    stats = [lambda x, k=k: basis.eval(k, x) for k in degrees]
    bmax = [0.0 if (k >= 2 and respect_domain) else math.inf for k in degrees]
    return ExpFamily(base, stats, bmax, names=[f"C{k}" for k in degrees])


def _finish(fam, beta, targets, diag):
    dist = tilt(fam, beta)
    achieved = tilted_mean(fam, beta)
    # beta = 0 is the base itself; renormalizing on the window only adds rounding
    div = kl(dist, fam.base) if np.any(beta) else 0.0
    diag = dict(diag)
    diag["dual_value"] = float(np.dot(beta, achieved) - log_partition(fam, beta))
    diag["residual"] = float(np.max(np.abs(achieved - targets)))
    return ProjectionResult(dist, np.asarray(beta, dtype=float), fam.names,
                            np.asarray(targets, dtype=float), achieved, max(div, 0.0), diag)


def project_one(lam, k, h, eps_trunc=DEFAULT_EPS):
    """Minimum-information projection of ``Po(lam)`` onto ``{E[C_k] = h}``.

    For ``k >= 2`` a positive target has no minimizer (the infimum 0 is not
    attained), so NonexistenceError is raised; otherwise the solution is the
    tilt with ``beta <= 0``.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be an integer >= 1, got {k}")
    k = int(k)
    if k >= 2 and h > 0:
        raise NonexistenceError(
            f"E[C_{k}] = {h} > 0 has no minimum-information distribution from Po({lam})")
    fam = charlier_family(lam, (k,), eps_trunc)
    if h == 0:
        return _finish(fam, np.zeros(1), np.zeros(1), {"iterations": 0, "method": "trivial"})
    beta = solve_beta_for_mean(fam, h)
    return _finish(fam, np.array([beta]), np.array([float(h)]),
                   {"method": "safeguarded-newton", "natural_domain": True})


def _check_hull(fam, h):
    """LP test that ``h`` is a mean of some distribution on the window."""
    n = fam.T.shape[1]
    A = np.vstack([fam.T, np.ones(n)])
    b = np.concatenate([h, [1.0]])
    res = linprog(np.zeros(n), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    return res.status == 0


def _dual_newton(fam, h, beta0, tol, max_iter):
    """Damped Newton on ``ln Z(beta) - beta . h``; returns (beta, iterations)."""
    beta = np.array(beta0, dtype=float)

    def g(b):
        try:
            return log_partition(fam, b) - float(np.dot(b, h))
        except RangeError:
            return math.inf

    gb = g(beta)
    for it in range(1, max_iter + 1):
        m, C = tilted_moments(fam, beta)
        r = m - h
        if np.max(np.abs(r)) <= tol:
            return beta, it - 1
        try:
            step = np.linalg.solve(C, -r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(C, -r, rcond=None)[0]
        slope = float(np.dot(r, step))
        rn = float(np.linalg.norm(r))
        s, accepted = 1.0, False
        while s >= 1e-10:
            cand = beta + s * step
            gc = g(cand)
            if math.isfinite(gc):
                if gc <= gb + 1e-4 * s * slope:
                    accepted = True
                # close to the optimum the decrease of g drops below its rounding;
                # the moment residual is then the only usable merit
                elif (abs(gc - gb) <= 1e-12 * max(1.0, abs(gb))
                      and np.linalg.norm(tilted_mean(fam, cand) - h) < rn):
                    accepted = True
            if accepted:
                break
            s *= 0.5
        if not accepted:
            break
        beta, gb = cand, gc
    m = tilted_mean(fam, beta)
    res = float(np.max(np.abs(m - h)))
    if res <= tol:
        return beta, max_iter
    raise ConvergenceError(f"dual Newton stopped with residual {res:.3e}", last_iterate=beta,
                           residual=res)


def _natural(degrees, beta):
    for k, b in sorted(zip(degrees, beta), reverse=True):
        if b != 0.0:
            return bool(k == 1 or b < 0)
    return True


def project_two(lam, degrees, targets, eps_trunc=DEFAULT_EPS, tol=NEWTON_TOL, max_iter=MAX_ITER):
    """Projection of ``Po(lam)`` onto ``{E[C_i] = a, E[C_j] = b}`` for ``degrees = (i, j)``.

    Solved on the truncated window. ``diagnostics["natural_domain"]`` is False
    when the leading nonzero natural parameter belongs to a super-linear
    statistic and is positive: such a tilt is normalizable only because the
    window is finite, so the result then depends on the truncation.
    """
    degrees = tuple(int(k) for k in degrees)
    if len(degrees) != 2 or degrees[0] == degrees[1]:
        raise ParameterError(f"need two distinct degrees, got {degrees}")
    h = np.asarray(targets, dtype=float)
    fam = charlier_family(lam, degrees, eps_trunc, respect_domain=False)
    if np.all(h == 0):
        return _finish(fam, np.zeros(2), h, {"iterations": 0, "method": "trivial",
                                             "natural_domain": True})
    if not _check_hull(fam, h):
        raise InfeasibleError(f"targets {h.tolist()} are not moments of any distribution "
                              f"on the window {fam.base.offset}..{fam.base.stop - 1}")
    diag = {"method": "newton"}
    try:
        beta, iters = _dual_newton(fam, h, np.zeros(2), tol, max_iter)
    except ConvergenceError:
        # continuation from the base moments along a straight path of targets
        m0 = tilted_mean(fam, np.zeros(2))
        beta, iters = np.zeros(2), 0
        for steps in (10, 100):
            try:
                b = np.zeros(2)
                for t in np.linspace(0.0, 1.0, steps + 1)[1:]:
                    b, i = _dual_newton(fam, m0 + t * (h - m0), b, tol, max_iter)
                    iters += i
                beta = b
                break
            except ConvergenceError as exc:
                last = exc
        else:
            raise last
        diag["method"] = "homotopy"
    diag["iterations"] = iters
    diag["natural_domain"] = _natural(degrees, beta)
    return _finish(fam, beta, h, diag)


def po_beta(lam, n, eps_trunc=DEFAULT_EPS):
    """Minimum-information member from ``Po(lam)`` with the mean and variance of ``Bi(n, lam/n)``."""
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be an integer >= 1, got {n}")
    if not lam < n:
        raise ParameterError(f"need lam < n, got lam={lam}, n={n}")
    res = project_two(lam, (1, 2), (0.0, -lam / (math.sqrt(2.0) * n)), eps_trunc)
    res.distribution = res.distribution.with_label(f"Po_beta({lam:g}, n={int(n)})")
    return res


def signed_loglik(fam, mu, respect_domain=True):
    """``G(mu) = sign(mu - mu0) (2 D(Q^mu || Q0))^(1/2)`` for a scalar family."""
    mu0 = float(tilted_mean(fam, np.zeros(1))[0])
    if mu == mu0:
        return 0.0
    try:
        b = solve_beta_for_mean(fam, mu, respect_domain=respect_domain)
    except InfeasibleError as exc:
        raise DomainError(str(exc)) from exc
    d = max(b * mu - log_partition(fam, [b]), 0.0)
    return math.copysign(math.sqrt(2.0 * d), mu - mu0)


# --- independent oracles -------------------------------------------------------

def dual_value(fam, h, beta):
    """``beta . h - ln Z(beta)``; its maximum over beta is the projected divergence."""
    return float(np.dot(_beta(fam, beta), h)) - log_partition(fam, beta)


def dual_grid_oracle(fam, h, points=4001):
    """Maximize the scalar dual by a dense grid scan refined with Brent's method.

    Uses only ``ln Z``; no moments or Newton steps. Returns (beta, value).
    """
    if fam.dim != 1:
        raise ParameterError("grid oracle is one-dimensional")
    h = float(h)
    bmax = min(fam.beta_max[0], 1e6)

    def val(b):
        try:
            return dual_value(fam, [h], [b])
        except RangeError:
            return -math.inf

    def scan(grid):
        # ln Z on the whole grid at once; overflowing points score -inf
        with np.errstate(over="ignore", invalid="ignore"):
            lz = logsumexp(fam.logq0[None, :] + grid[:, None] * fam.T[0][None, :], axis=1)
        v = grid * h - (lz - fam.lognorm)
        return np.where(np.isfinite(v), v, -math.inf)

    lo, hi = -1.0, min(1.0, bmax)
    while True:
        grid = np.linspace(lo, hi, points)
        vals = scan(grid)
        i = int(np.argmax(vals))
        if i == 0 and lo > -1e6:
            lo *= 4.0
        elif i == points - 1 and hi < bmax:
            hi = min(hi * 4.0 if hi > 0 else 1.0, bmax)
        else:
            break
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
    res = minimize_scalar(lambda t: -val(t), bounds=(a, b), method="bounded",
                          options={"xatol": 1e-13})
    best = max((float(-res.fun), float(res.x)), (float(vals[i]), float(grid[i])))
    return best[1], best[0]


def dual_search_oracle(fam, h, x0=None):
    """Derivative-free (Nelder-Mead) maximization of the vector dual; returns (beta, value)."""
    h = np.asarray(h, dtype=float)

    def neg(b):
        try:
            return -dual_value(fam, h, b)
        except RangeError:
            return math.inf

    x0 = np.zeros(fam.dim) if x0 is None else np.asarray(x0, dtype=float)
    res = minimize(neg, x0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 20000, "maxfev": 40000})
    return np.asarray(res.x), float(-res.fun)
