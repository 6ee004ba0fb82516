"""Information divergence, total variation and Taylor-form divergence bounds (nats)."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError


def kl(P, Q):
    """D(P || Q) summed over the window of ``P``, with ``0 log 0 = 0``.

    Where ``Q`` carries an exact log-pmf it is evaluated beyond its stored
    window; an explicit ``Q`` is taken to vanish outside its window, giving
    ``inf`` when ``P`` puts mass there. Terms are added with ``math.fsum``.
    """
    x = P.support
    p = np.asarray(P.pmf)
    pos = p > 0
    x, p = x[pos], p[pos]
    logq = Q.logpmf_at(x)
    if np.any(np.isneginf(logq)):
        return math.inf
    logp = P.logpmf_at(x) if P.logpmf_fn is not None else np.log(p)
    return math.fsum((p * (logp - logq)).tolist())


def tv(P, Q):
    """``sum |p - q|`` (range [0, 2]) over both windows plus the tail-mass mismatch."""
    lo = min(P.offset, Q.offset)
    x = np.arange(lo, max(P.stop, Q.stop))
    diff = np.abs(P.pmf_at(x) - Q.pmf_at(x))
    return math.fsum(diff.tolist()) + abs(P.tail_mass - Q.tail_mass)


def mix(P1, P2, theta):
    """The mixture ``theta P1 + (1 - theta) P2`` as an explicit distribution."""
    from .dist import Distribution

    lo = min(P1.offset, P2.offset)
    x = np.arange(lo, max(P1.stop, P2.stop))
    pmf = theta * P1.pmf_at(x) + (1.0 - theta) * P2.pmf_at(x)
    tail = theta * P1.tail_mass + (1.0 - theta) * P2.tail_mass
    return Distribution(lo, pmf, tail, label="mixture",
                        eps_trunc=max(P1.eps_trunc, P2.eps_trunc))


def _extremes(fn, a, b, points=201):
    """Min and max of a smooth function on ``[a, b]``: grid, then bounded refinement."""
    if a == b:
        v = fn(a)
        return v, v
    grid = np.linspace(a, b, points)
    vals = np.array([fn(t) for t in grid])
    out = []
    for sign in (1.0, -1.0):
        i = int(np.argmin(sign * vals))
        best = sign * vals[i]
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: sign * fn(t), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12 * max(1.0, abs(hi))})
            best = min(best, float(res.fun))
        out.append(sign * best)
    return out[0], out[1]


def divergence_taylor_bounds(fam, mu, nu):
    """Bounds on ``D(Q^mu || Q^nu)`` from the variance function between the two means.

    Returns ``((mu-nu)^2 / (2 max V), (mu-nu)^2 / (2 min V))`` with ``V``
    ranging over members whose mean lies between ``mu`` and ``nu``. The
    extrema are taken in the natural parameter, which is monotone in the mean.
    """
    from .expfam import solve_beta_for_mean, tilted_moments
    from .errors import InfeasibleError

    if mu == nu:
        return 0.0, 0.0
    try:
        b_mu = float(solve_beta_for_mean(fam, mu, respect_domain=False))
        b_nu = float(solve_beta_for_mean(fam, nu, respect_domain=False))
    except InfeasibleError as exc:
        raise DomainError(str(exc)) from exc
    lo, hi = sorted((b_mu, b_nu))

    def variance(b):
        return float(tilted_moments(fam, [b])[1][0, 0])

    vmin, vmax = _extremes(variance, lo, hi)
    d2 = (mu - nu) ** 2
    return d2 / (2.0 * vmax), d2 / (2.0 * vmin)
