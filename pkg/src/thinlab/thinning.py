"""Alpha-thinning, convolution powers and the thinned-sum pipeline."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gammaln, xlog1py, xlogy

from .dist import DEFAULT_EPS, Distribution, FamilySpec, make_distribution, point_mass, require_valid
from .errors import ParameterError

DIRECT_LIMIT = 4096
_ROW_BLOCK = 256


def _trim_zeros(offset, pmf):
    nz = np.nonzero(pmf > 0)[0]
    if nz.size == 0:
        return offset, np.array([1.0])
    return offset + int(nz[0]), pmf[nz[0]:nz[-1] + 1]


def _thinning_kernel(lmin, lmax, alpha):
    """Rows l = lmin..lmax of K[l, k] = C(l, k) alpha^k (1-alpha)^(l-k), built from logs."""
    l = np.arange(lmin, lmax + 1, dtype=float)[:, None]
    k = np.arange(lmax + 1, dtype=float)[None, :]
    valid = k <= l
    with np.errstate(invalid="ignore"):
        logk = (gammaln(l + 1) - gammaln(k + 1) - gammaln(np.where(valid, l - k, 0) + 1)
                + xlogy(k, alpha) + xlog1py(np.where(valid, l - k, 0), -alpha))
    return np.where(valid, np.exp(logk), 0.0)


def thin(P, alpha):
    """The alpha-thinning of ``P``: keep each unit independently with probability alpha."""
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    require_valid(P)
    if alpha == 1.0:
        return P
    if alpha == 0.0:
        d = point_mass(0)
        return Distribution(0, d.pmf, P.tail_mass, label=f"0o{P.label}", eps_trunc=P.eps_trunc)
    out = np.zeros(P.stop)
    for start in range(P.offset, P.stop, _ROW_BLOCK):
        stop = min(start + _ROW_BLOCK, P.stop)
        K = _thinning_kernel(start, stop - 1, alpha)
        out[:stop] += P.pmf[start - P.offset:stop - P.offset] @ K
    offset, out = _trim_zeros(0, out)
    return Distribution(offset, out, P.tail_mass, label=f"{alpha:g}o{P.label}",
                        eps_trunc=P.eps_trunc)


def _convolve(a, b):
    if min(a.size, b.size) < DIRECT_LIMIT:
        return np.convolve(a, b)
    return np.clip(fftconvolve(a, b), 0.0, None)


def _retruncate(offset, pmf, budget):
    """Drop end entries whose joint mass stays within ``budget``; return the dropped mass."""
    half = 0.5 * budget
    top = np.cumsum(pmf[::-1])
    n_hi = int(np.searchsorted(top, half, side="right"))
    bot = np.cumsum(pmf)
    n_lo = int(np.searchsorted(bot, half, side="right"))
    if n_lo + n_hi >= pmf.size:
        return offset, pmf, 0.0
    dropped = (top[n_hi - 1] if n_hi else 0.0) + (bot[n_lo - 1] if n_lo else 0.0)
    return offset + n_lo, pmf[n_lo:pmf.size - n_hi], float(dropped)


def _conv_pair(a, b, budget):
    oa, pa, ta = a
    ob, pb, tb = b
    out = _convolve(pa, pb)
    offset, out, dropped = _retruncate(oa + ob, out, budget)
    offset, out = _trim_zeros(offset, out)
    tail = ta + tb - ta * tb + dropped
    return offset, out, tail


def convolve(P, Q):
    """Law of the independent sum, re-truncated within the larger truncation budget."""
    require_valid(P)
    require_valid(Q)
    eps = max(P.eps_trunc, Q.eps_trunc)
    offset, pmf, tail = _conv_pair((P.offset, np.asarray(P.pmf), P.tail_mass),
                                   (Q.offset, np.asarray(Q.pmf), Q.tail_mass), 0.5 * eps)
    return Distribution(offset, pmf, tail, label=f"{P.label}*{Q.label}", eps_trunc=2 * eps)


def convolve_pow(P, n):
    """Exact n-fold convolution by binary exponentiation; ``n = 0`` gives the point mass at 0.

    After every pairwise product the window is re-truncated with a per-step
    budget so that the total added truncation stays within ``P.eps_trunc``;
    the dropped mass is accumulated into ``tail_mass``.
    """
    if int(n) != n or n < 0:
        raise ParameterError(f"n must be a nonnegative integer, got {n}")
    n = int(n)
    require_valid(P)
    if n == 0:
        return point_mass(0)
    if n == 1:
        return P
    steps = 2 * n.bit_length()
    budget = P.eps_trunc / steps
    base = (P.offset, np.asarray(P.pmf), P.tail_mass)
    acc = None
    m = n
    while m:
        if m & 1:
            acc = base if acc is None else _conv_pair(acc, base, budget)
        m >>= 1
        if m:
            base = _conv_pair(base, base, budget)
    offset, pmf, tail = acc
    return Distribution(offset, pmf, tail, label=f"{P.label}^*{n}",
                        eps_trunc=(n + 1) * P.eps_trunc)


def closed_form_thin_law(spec, n, eps_trunc=DEFAULT_EPS):
    """Closed form of ``(1/n) o P^{*n}`` for families conserved by both operations, else None."""
    p = spec.params
    if spec.kind == "bernoulli":
        out = FamilySpec.binomial(n, p["p"] / n)
    elif spec.kind == "binomial":
        out = FamilySpec.binomial(n * p["n"], p["p"] / n)
    elif spec.kind == "poisson":
        out = spec
    elif spec.kind in ("geometric", "negative_binomial"):
        r = p.get("r", 1.0) * n
        q = p["p"]
        # thinning NB(r, q) by 1/n gives NB(r, q / (q + (1 - q)/n))
        out = FamilySpec.negative_binomial(r, q / (q + (1.0 - q) / n))
    else:
        return None
    return make_distribution(out, eps_trunc)


def thin_law(P, n, closed_form=True):
    """``(1/n) o P^{*n}``, the n-th term of the law of thin numbers.

    When ``P`` carries a parametric family whose convolution powers and
    thinnings stay in closed form (Bernoulli, binomial, Poisson, geometric,
    negative binomial) the result is built directly; otherwise the generic
    convolution and thinning path is used.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be an integer >= 1, got {n}")
    n = int(n)
    out = None
    if closed_form and P.family is not None and P.family.kind != "explicit":
        out = closed_form_thin_law(P.family, n, P.eps_trunc)
    if out is None:
        out = thin(convolve_pow(P, n), 1.0 / n)
    return out.with_label(f"thin_law({P.label}, n={n})")


def thin_family(spec, alpha, eps_trunc=DEFAULT_EPS):
    """Closed-form alpha-thinning of a parametric family (None when not closed)."""
    p = spec.params
    if spec.kind == "poisson":
        return make_distribution(FamilySpec.poisson(alpha * p["lam"]), eps_trunc)
    if spec.kind == "binomial":
        return make_distribution(FamilySpec.binomial(p["n"], alpha * p["p"]), eps_trunc)
    if spec.kind == "bernoulli":
        return make_distribution(FamilySpec.bernoulli(alpha * p["p"]), eps_trunc)
    if spec.kind in ("geometric", "negative_binomial"):
        q = p["p"]
        return make_distribution(
            FamilySpec.negative_binomial(p.get("r", 1.0), q / (q + alpha * (1.0 - q))), eps_trunc)
    return None


def entropy(P):
    """Shannon entropy in nats over the stored window."""
    p = P.pmf[P.pmf > 0]
    return -math.fsum((p * np.log(p)).tolist())
