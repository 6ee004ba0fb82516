"""Normalized Poisson-Charlier and Hermite polynomials with product expansions.

``C_k^lam`` is orthonormal under Po(lam):

    C_k(x) = (lam^k k!)^(-1/2) * sum_l binom(k, l) (-lam)^(k-l) x^(l falling)

and is evaluated by the normalized three-term recurrence

    sqrt((k+1) lam) C_{k+1} = (x - k - lam) C_k - sqrt(k lam) C_{k-1}.

Hermite polynomials use the probabilists' convention (``He_n``, orthogonal
with ``E[He_n^2] = n!`` under the standard Gaussian).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .errors import DegreeError, ParameterError, RangeError

DEFAULT_KMAX = 12
HERMITE_MAX_DEGREE = 24


def falling(x, k):
    """Falling factorial x (x-1) ... (x-k+1), vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for i in range(k):
        out = out * (x - i)
    return out


def _falling_int(x, k):
    out = 1
    for i in range(k):
        out *= x - i
    return out


class CharlierBasis:
    """Poisson-Charlier polynomials for a fixed mean ``lam`` up to degree ``k_max``.

    The falling-factorial expansion coefficients
    ``a[k, l] = binom(k, l) (-lam)^(k-l) / sqrt(lam^k k!)`` are cached at
    construction and never modified.
    """

    def __init__(self, lam, k_max=DEFAULT_KMAX):
        if not lam > 0 or not math.isfinite(lam):
            raise ParameterError(f"lam must be > 0, got {lam}")
        if int(k_max) != k_max or k_max < 1:
            raise DegreeError(f"k_max must be a positive integer, got {k_max}")
        self.lam = float(lam)
        self.k_max = int(k_max)
        coeffs = np.zeros((self.k_max + 1, self.k_max + 1))
        try:
            for k in range(self.k_max + 1):
                norm = math.sqrt(self.lam ** k * factorial(k))
                for l in range(k + 1):
                    coeffs[k, l] = comb(k, l) * (-self.lam) ** (k - l) / norm
        except (OverflowError, ZeroDivisionError) as exc:
            raise RangeError(f"Charlier coefficients leave double range for lam={lam}, "
                             f"k_max={k_max}") from exc
        if not np.all(np.isfinite(coeffs)):
            raise RangeError(f"Charlier coefficients overflow for lam={lam}, k_max={k_max}")
        coeffs.setflags(write=False)
        self.falling_coeffs = coeffs

    def __repr__(self):
        return f"CharlierBasis(lam={self.lam!r}, k_max={self.k_max})"

    def _check(self, k):
        if int(k) != k or k < 0:
            raise DegreeError(f"degree must be a nonnegative integer, got {k}")
        if k > self.k_max:
            raise DegreeError(f"degree {k} exceeds k_max={self.k_max}")

    def eval_all(self, x, k=None):
        """Rows ``C_0(x) .. C_k(x)`` (default ``k = k_max``) by upward recurrence."""
        k = self.k_max if k is None else k
        self._check(k)
        x = np.asarray(x, dtype=float)
        lam = self.lam
        out = np.empty((k + 1,) + x.shape)
        out[0] = 1.0
        if k >= 1:
            out[1] = (x - lam) / math.sqrt(lam)
        for j in range(1, k):
            out[j + 1] = ((x - j - lam) * out[j] - math.sqrt(j * lam) * out[j - 1]) / math.sqrt(
                (j + 1) * lam)
        return out

    def eval(self, k, x):
        return self.eval_all(x, k)[k]

    def eval_explicit(self, k, x):
        """The falling-factorial sum; exact in structure but prone to cancellation."""
        self._check(k)
        x = np.asarray(x, dtype=float)
        return sum(self.falling_coeffs[k, l] * falling(x, l) for l in range(k + 1))

    def minimum(self, k, upper):
        """Minimum of ``C_k`` over the integers ``0..upper`` and where it occurs."""
        x = np.arange(int(upper) + 1)
        v = self.eval(k, x)
        i = int(np.argmin(v))
        return float(v[i]), int(x[i])


def charlier_eval(basis, k, x):
    """Normalized Poisson-Charlier polynomial ``C_k^lam(x)``."""
    return basis.eval(k, x)


@dataclass(frozen=True)
class LinearizationCoeffs:
    """Expansion ``C_k C_l = prefactor * sum_m coeffs[m] C_m``."""

    k: int
    l: int
    lam: float
    coeffs: np.ndarray
    prefactor: float

    @property
    def scaled(self):
        """Coefficients with the prefactor folded in, i.e. ``E[C_k C_l C_m]``."""
        return self.prefactor * self.coeffs

    def expand(self, basis, x):
        rows = basis.eval_all(x, self.k + self.l)
        return np.tensordot(self.scaled, rows, axes=1)

    def to_dict(self):
        return {"k": self.k, "l": self.l, "lambda": self.lam, "prefactor": self.prefactor,
                "coeffs": self.coeffs.tolist(), "scaled": self.scaled.tolist()}


def _inner_sum(k, l, m, n):
    """Integer double sum over mu, nu of binom*binom*mu^(n)nu^(n)(mu+nu-n)^(m)(-1)^(mu+nu)."""
    total = 0
    for mu in range(n, k + 1):
        a = comb(k, mu) * _falling_int(mu, n) * (-1) ** mu
        for nu in range(n, l + 1):
            total += a * comb(l, nu) * _falling_int(nu, n) * (-1) ** nu * _falling_int(mu + nu - n, m)
    return total


def khokhlov_product_coeffs(basis, k, l):
    """Linearization of ``C_k C_l`` (Khokhlov's formula with the sign factor restored).

    The index ``n`` runs over ``0..min(k, l)``: it counts the shared factors
    in ``x^(mu falling) x^(nu falling) = sum_n n! binom(mu,n) binom(nu,n) x^(mu+nu-n falling)``.
    """
    for d in (k, l):
        if int(d) != d or d < 0:
            raise DegreeError(f"degree must be a nonnegative integer, got {d}")
    if k + l > basis.k_max:
        raise DegreeError(f"k + l = {k + l} exceeds k_max={basis.k_max}")
    lam = basis.lam
    coeffs = np.empty(k + l + 1)
    try:
        for m in range(k + l + 1):
            norm_m = math.sqrt(factorial(m) * lam ** m)
            terms = [_inner_sum(k, l, m, n) / (factorial(n) * lam ** n) for n in range(min(k, l) + 1)]
            coeffs[m] = math.fsum(terms) / norm_m
        prefactor = (-1) ** (k + l) * math.sqrt(lam ** (k + l) / (factorial(k) * factorial(l)))
    except (OverflowError, ZeroDivisionError) as exc:
        raise RangeError(f"linearization of C_{k} C_{l} overflows at lam={lam}") from exc
    if not (np.all(np.isfinite(coeffs)) and math.isfinite(prefactor)):
        raise RangeError(f"linearization of C_{k} C_{l} overflows at lam={lam}")
    return LinearizationCoeffs(int(k), int(l), lam, coeffs, prefactor)


def charlier_square_coeffs(basis, k):
    """Expansion ``C_k^2 = (lam^k / k!) sum_{m<=2k} c_m C_m``."""
    return khokhlov_product_coeffs(basis, k, k)


def square_center_coeff(lam, k):
    """Closed form of the middle coefficient ``c_k`` of ``C_k^2``.

    ``c_k = (k! lam^k)^(-1/2) sum_n (k^(n falling))^3 n^(k-n falling) / (n! lam^n)``;
    every term is nonnegative and the terms with ``k/2 <= n <= k`` are positive.
    """
    terms = [_falling_int(k, n) ** 3 * _falling_int(n, k - n) / (factorial(n) * lam ** n)
             for n in range(k + 1)]
    return math.fsum(terms) / math.sqrt(factorial(k) * lam ** k)


def charlier_triple_moment(basis, k):
    """``E[C_k(X)^3]`` for ``X ~ Po(lam)``, equal to ``(lam^k / k!) c_k``."""
    if int(k) != k or k < 0:
        raise DegreeError(f"degree must be a nonnegative integer, got {k}")
    if 2 * k > basis.k_max:
        raise DegreeError(f"triple moment of degree {k} needs k_max >= {2 * k}")
    lam = basis.lam
    try:
        value = lam ** k / factorial(k) * square_center_coeff(lam, k)
    except (OverflowError, ZeroDivisionError) as exc:
        raise RangeError(f"triple moment overflows for k={k}, lam={lam}") from exc
    if not math.isfinite(value):
        raise RangeError(f"triple moment overflows for k={k}, lam={lam}")
    return value


def charlier_c2_minimum(lam):
    """Minimum of ``C_2^lam`` over the real line, attained at ``x = lam + 1/2``."""
    return -2 ** -0.5 - 1.0 / (4.0 * math.sqrt(2.0) * lam)


# --- Hermite -----------------------------------------------------------------

def _check_hermite(k):
    if int(k) != k or k < 0:
        raise DegreeError(f"degree must be a nonnegative integer, got {k}")
    if k > HERMITE_MAX_DEGREE:
        raise RangeError(f"Hermite degree {k} exceeds {HERMITE_MAX_DEGREE}")


def hermite_all(k, x):
    """Rows ``He_0(x) .. He_k(x)``: He_{j+1} = x He_j - j He_{j-1}."""
    _check_hermite(k)
    x = np.asarray(x, dtype=float)
    out = np.empty((k + 1,) + x.shape)
    out[0] = 1.0
    if k >= 1:
        out[1] = x
    for j in range(1, k):
        out[j + 1] = x * out[j] - j * out[j - 1]
    return out


def hermite_eval(k, x):
    """Probabilists' Hermite polynomial ``He_k(x)``."""
    return hermite_all(k, x)[k]


def hermite_normalized_eval(k, x):
    """Orthonormal Hermite polynomial ``He_k(x) / sqrt(k!)``."""
    return hermite_eval(k, x) / math.sqrt(factorial(k))


def hermite_product_coeffs(m, n):
    """Feldheim's expansion ``He_m He_n = sum_r r! C(m,r) C(n,r) He_{m+n-2r}``.

    Returned as an array indexed by degree ``0..m+n``.
    """
    _check_hermite(m)
    _check_hermite(n)
    if m + n > HERMITE_MAX_DEGREE:
        raise RangeError(f"m + n = {m + n} exceeds {HERMITE_MAX_DEGREE}")
    out = np.zeros(m + n + 1)
    for r in range(min(m, n) + 1):
        out[m + n - 2 * r] = factorial(r) * comb(m, r) * comb(n, r)
    return out


def hermite_triple_moment(k, normalized=False, nodes=64):
    """``E[He_k(Z)^3]`` for standard Gaussian ``Z`` by Gauss-Hermite quadrature."""
    from numpy.polynomial.hermite_e import hermegauss

    _check_hermite(k)
    x, w = hermegauss(max(nodes, 2 * k))
    w = w / math.sqrt(2.0 * math.pi)
    h = hermite_normalized_eval(k, x) if normalized else hermite_eval(k, x)
    return float(np.dot(w, h ** 3))
