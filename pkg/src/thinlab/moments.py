"""Factorial and Charlier moments, kappa detection, thinned-sum moments, variance functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .charlier import CharlierBasis, falling
from .errors import DegreeError, ParameterError, UnsupportedError

MAX_MOMENT_DEGREE = 12
KAPPA_RTOL = 1e-9
ULC_RTOL = 1e-14


def factorial_moment(P, k):
    """``E[X^(k falling)]`` over the stored window."""
    if int(k) != k or k < 0:
        raise DegreeError(f"degree must be a nonnegative integer, got {k}")
    if k > MAX_MOMENT_DEGREE:
        raise DegreeError(f"factorial moments beyond degree {MAX_MOMENT_DEGREE} are refused")
    x = P.support.astype(float)
    return math.fsum((falling(x, int(k)) * P.pmf).tolist())


def charlier_moment(P, basis, k):
    """``E_P[C_k^lam(X)]`` by direct summation."""
    vals = basis.eval(k, P.support)
    return math.fsum((vals * P.pmf).tolist())


def charlier_from_factorial(basis, k, fmoments):
    """Charlier moment rebuilt from factorial moments through the explicit expansion."""
    return math.fsum(basis.falling_coeffs[k, l] * fmoments[l] for l in range(k + 1))


@dataclass(frozen=True)
class KappaReport:
    """First nonvanishing Charlier moment; ``kappa`` is None when none was found."""

    kappa: Optional[int]
    c: Optional[float]
    tested_up_to: int
    tolerance: float
    moments: tuple = ()

    @property
    def found(self):
        return self.kappa is not None

    def to_dict(self):
        return {"kappa": self.kappa, "c": self.c, "tested_up_to": self.tested_up_to,
                "tolerance": self.tolerance, "moments": list(self.moments)}


def detect_kappa(P, basis, k_max=10, tol=None):
    """Smallest ``k >= 1`` with ``|E[C_k]|`` above a magnitude-scaled tolerance.

    The default tolerance for degree k is ``1e-9 * max(1, E|C_k|)``, which
    separates structural zeros from rounding in the summation.
    """
    k_max = min(int(k_max), basis.k_max)
    moments = []
    used = tol
    for k in range(1, k_max + 1):
        vals = basis.eval(k, P.support)
        m = math.fsum((vals * P.pmf).tolist())
        moments.append(m)
        t = tol if tol is not None else KAPPA_RTOL * max(1.0, float(np.dot(np.abs(vals), P.pmf)))
        used = t
        if abs(m) > t:
            return KappaReport(k, m, k_max, t, tuple(moments))
    return KappaReport(None, None, k_max, used if used is not None else KAPPA_RTOL, tuple(moments))


def thinned_sum_moments_closed(P, n, lam=None, kappa=None, variant="corrected"):
    """Factorial moments of ``(1/n) o (X_1 + ... + X_n)`` for degrees ``1..kappa+1``.

    With ``d_j = E[X^(j falling)] - lam^j``:

    * ``k < kappa``: ``lam^k``
    * ``k = kappa``: ``lam^k + d_kappa / n^(kappa-1)``
    * ``k = kappa+1``: ``lam^k + (n-1)(kappa+1) lam d_kappa / n^kappa + d_{kappa+1} / n^kappa``

    ``variant="printed"`` halves the middle term of the last line, as in the
    published display; the pipeline check shows the unhalved form is the
    exact one.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be an integer >= 1, got {n}")
    if variant not in ("corrected", "printed"):
        raise ParameterError(f"unknown variant {variant!r}")
    lam = P.mean() if lam is None else float(lam)
    if kappa is None:
        rep = detect_kappa(P, CharlierBasis(lam, MAX_MOMENT_DEGREE))
        if not rep.found:
            raise UnsupportedError("no nonzero Charlier moment detected; kappa undefined")
        kappa = rep.kappa
    if kappa + 1 > MAX_MOMENT_DEGREE:
        raise DegreeError(f"kappa+1 = {kappa + 1} exceeds {MAX_MOMENT_DEGREE}")
    d_k = factorial_moment(P, kappa) - lam ** kappa
    d_k1 = factorial_moment(P, kappa + 1) - lam ** (kappa + 1)
    half = 0.5 if variant == "printed" else 1.0
    out = {k: lam ** k for k in range(1, kappa)}
    out[kappa] = lam ** kappa + d_k / n ** (kappa - 1)
    out[kappa + 1] = (lam ** (kappa + 1) + half * (n - 1) * (kappa + 1) * lam * d_k / n ** kappa
                      + d_k1 / n ** kappa)
    return out


def charlier_decay_check(P, basis, n, k):
    """Predicted ``E[C_k(X)] / n^(k-1)`` next to the moment of ``thin_law(P, n)``."""
    from .thinning import thin_law

    closed = charlier_moment(P, basis, k) / n ** (k - 1)
    empirical = charlier_moment(thin_law(P, n), basis, k)
    return closed, empirical


@dataclass(frozen=True)
class VarianceFunction:
    """Polynomial variance function ``V(mu) = sum_j coeffs[j] mu^j`` of degree at most 3."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if len(c) > 4 and any(v != 0.0 for v in c[4:]):
            raise DegreeError("variance functions above cubic degree are not supported")
        c = (c + (0.0,) * 4)[:4]
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def poisson(cls):
        return cls((0.0, 1.0))

    @classmethod
    def binomial(cls, n):
        return cls((0.0, 1.0, -1.0 / n))

    @classmethod
    def negative_binomial(cls, r):
        return cls((0.0, 1.0, 1.0 / r))

    def __call__(self, mu):
        return np.polynomial.polynomial.polyval(mu, self.coeffs)


def variance_function_transform(V, alpha):
    """``V_alpha(x) = alpha^2 V(x / alpha) - alpha x + x`` at coefficient level.

    Coefficient j becomes ``a_j alpha^(2-j)``; the linear one is written as
    ``(a_1 - 1) alpha + 1`` so that ``a_1 = 1`` maps to exactly 1.
    """
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    a0, a1, a2, a3 = V.coeffs
    return VarianceFunction((a0 * alpha ** 2, (a1 - 1.0) * alpha + 1.0, a2, a3 / alpha))


def thinned_sum_vf(V, n):
    """Variance function of the family based on ``(1/n) o P^{*n}``: ``(V(x) - x)/n + x``."""
    if not n >= 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    a0, a1, a2, a3 = V.coeffs
    return VarianceFunction((a0 / n, (a1 - 1.0) / n + 1.0, a2 / n, a3 / n))


def ulc_check(P, rtol=ULC_RTOL):
    """True iff ``k p(k)^2 >= (k+1) p(k+1) p(k-1)`` at every interior point.

    Each comparison is relaxed by ``rtol * (1 + k)`` times its left side:
    pmf values carry rounding proportional to the size of their logarithm,
    which grows with ``k``, and the Poisson law sits exactly on equality. A
    window with an internal zero is not ultra log-concave.
    """
    p = np.asarray(P.pmf)
    if p.size <= 2:
        return bool(np.all(p > 0))
    if np.any(p <= 0):
        return False
    k = P.support[1:-1].astype(float)
    lhs = k * p[1:-1] ** 2
    rhs = (k + 1.0) * p[2:] * p[:-2]
    return bool(np.all(lhs >= rhs - rtol * (1.0 + k) * lhs))
