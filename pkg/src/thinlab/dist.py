"""Truncated probability mass functions on the nonnegative integers.

A :class:`Distribution` stores a contiguous window ``offset, offset+1, ...``
of probabilities together with the mass that falls outside the window.
Parametric members (Poisson, binomial, geometric, ...) keep their exact
log-pmf so that consumers such as :func:`thinlab.divergence.kl` can evaluate
them beyond the stored window.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlog1py, xlogy

from .errors import ConfigError, InvalidDistributionError, ParameterError

DEFAULT_EPS = 1e-15
NORMALIZATION_TOL = 1e-12

KINDS = ("poisson", "binomial", "bernoulli", "geometric", "negative_binomial", "explicit")

# json key -> FamilySpec parameter name
_JSON_KEYS = {"lambda": "lam"}


@dataclass(frozen=True)
class FamilySpec:
    """Parametric description of a distribution on N0.

    Parameters by kind: ``poisson(lam)``, ``binomial(n, p)``,
    ``bernoulli(p)``, ``geometric(p)`` with pmf ``p (1-p)^k``,
    ``negative_binomial(r, p)`` counting failures before the r-th success,
    and ``explicit(pmf, offset, tail_mass)``.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown family kind {self.kind!r}")
        p = self.params
        try:
            if self.kind == "poisson":
                if not p["lam"] > 0 or not math.isfinite(p["lam"]):
                    raise ParameterError(f"poisson needs lam > 0, got {p['lam']}")
            elif self.kind == "binomial":
                n = p["n"]
                if int(n) != n or n < 1:
                    raise ParameterError(f"binomial needs integer n >= 1, got {n}")
                _check_prob(p["p"])
            elif self.kind == "bernoulli":
                _check_prob(p["p"])
            elif self.kind == "geometric":
                _check_prob(p["p"])
                if p["p"] == 0:
                    raise ParameterError("geometric needs p > 0")
            elif self.kind == "negative_binomial":
                if not p["r"] > 0:
                    raise ParameterError(f"negative_binomial needs r > 0, got {p['r']}")
                _check_prob(p["p"])
                if p["p"] == 0:
                    raise ParameterError("negative_binomial needs p > 0")
            else:
                pmf = np.asarray(p["pmf"], dtype=float)
                if pmf.ndim != 1 or pmf.size == 0:
                    raise ParameterError("explicit pmf must be a nonempty 1-D sequence")
                if int(p.get("offset", 0)) < 0:
                    raise ParameterError("explicit offset must be >= 0")
        except KeyError as exc:
            raise ParameterError(f"{self.kind} is missing parameter {exc.args[0]!r}") from None

    @classmethod
    def poisson(cls, lam):
        return cls("poisson", {"lam": float(lam)})

    @classmethod
    def binomial(cls, n, p):
        return cls("binomial", {"n": int(n), "p": float(p)})

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", {"p": float(p)})

    @classmethod
    def geometric(cls, p):
        return cls("geometric", {"p": float(p)})

    @classmethod
    def negative_binomial(cls, r, p):
        return cls("negative_binomial", {"r": float(r), "p": float(p)})

    @classmethod
    def explicit(cls, pmf, offset=0, tail_mass=0.0):
        return cls("explicit", {"pmf": [float(v) for v in pmf], "offset": int(offset),
                                "tail_mass": float(tail_mass)})

    def frozen(self):
        """The matching frozen ``scipy.stats`` distribution (parametric kinds only)."""
        p = self.params
        if self.kind == "poisson":
            return stats.poisson(p["lam"])
        if self.kind == "binomial":
            return stats.binom(p["n"], p["p"])
        if self.kind == "bernoulli":
            return stats.binom(1, p["p"])
        if self.kind == "geometric":
            return stats.nbinom(1, p["p"])
        if self.kind == "negative_binomial":
            return stats.nbinom(p["r"], p["p"])
        raise ParameterError("explicit families have no scipy counterpart")

    def mean(self):
        if self.kind == "explicit":
            pmf = np.asarray(self.params["pmf"], dtype=float)
            return float(np.dot(np.arange(pmf.size) + self.params.get("offset", 0), pmf))
        return float(self.frozen().mean())

    def to_dict(self):
        if self.kind == "explicit":
            return {"kind": "explicit", "offset": int(self.params.get("offset", 0)),
                    "pmf": list(self.params["pmf"]),
                    "tail_mass": float(self.params.get("tail_mass", 0.0))}
        out = {"kind": self.kind}
        inverse = {v: k for k, v in _JSON_KEYS.items()}
        for name, value in self.params.items():
            out[inverse.get(name, name)] = value
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kind = data.pop("kind", None)
        data.pop("eps_trunc", None)
        data.pop("label", None)
        if kind == "explicit":
            return cls.explicit(data["pmf"], data.get("offset", 0), data.get("tail_mass", 0.0))
        params = {_JSON_KEYS.get(k, k): v for k, v in data.items()}
        if kind == "binomial" and "n" in params:
            params["n"] = int(params["n"])
        return cls(kind, params)


def _check_prob(p):
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability must lie in [0, 1], got {p}")


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability mass on the window ``offset .. offset+len(pmf)-1``.

    ``tail_mass`` is the probability outside the window, ``eps_trunc`` the
    budget it is allowed to reach. ``logpmf_fn`` (optional) evaluates the
    exact log-pmf anywhere on N0.
    """

    offset: int
    pmf: np.ndarray
    tail_mass: float = 0.0
    label: str = ""
    family: Optional[FamilySpec] = None
    eps_trunc: float = DEFAULT_EPS
    logpmf_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        pmf = np.array(self.pmf, dtype=float).reshape(-1)
        if pmf.size == 0:
            raise ParameterError("pmf window must be nonempty")
        if int(self.offset) != self.offset or self.offset < 0:
            raise ParameterError(f"offset must be a nonnegative integer, got {self.offset}")
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "offset", int(self.offset))
        object.__setattr__(self, "tail_mass", float(self.tail_mass))

    @property
    def support(self):
        return np.arange(self.offset, self.offset + self.pmf.size)

    @property
    def stop(self):
        """One past the last stored support point."""
        return self.offset + self.pmf.size

    def pmf_at(self, x):
        x = np.asarray(x)
        idx = x - self.offset
        inside = (idx >= 0) & (idx < self.pmf.size)
        out = np.zeros(x.shape, dtype=float)
        out[inside] = self.pmf[idx[inside].astype(int)]
        return out

    def logpmf_at(self, x):
        """Log-probabilities at ``x``; ``-inf`` for structural zeros."""
        x = np.asarray(x)
        if self.logpmf_fn is not None:
            return np.asarray(self.logpmf_fn(x), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(self.pmf_at(x))

    def mean(self):
        return summary_stats(self)[0]

    def variance(self):
        return summary_stats(self)[1]

    def with_label(self, label):
        return Distribution(self.offset, self.pmf, self.tail_mass, label, self.family,
                            self.eps_trunc, self.logpmf_fn)

    def to_dict(self, explicit=False):
        if self.family is not None and self.family.kind != "explicit" and not explicit:
            out = self.family.to_dict()
            out["eps_trunc"] = self.eps_trunc
            return out
        return {"kind": "explicit", "offset": self.offset, "pmf": self.pmf.tolist(),
                "tail_mass": self.tail_mass}

    def to_json(self, explicit=False):
        return json.dumps(self.to_dict(explicit=explicit))

    @classmethod
    def from_dict(cls, data, eps_trunc=None):
        if data.get("kind") == "explicit":
            return cls(int(data.get("offset", 0)), data["pmf"], float(data.get("tail_mass", 0.0)),
                       label=data.get("label", ""))
        eps = eps_trunc if eps_trunc is not None else data.get("eps_trunc", DEFAULT_EPS)
        return make_distribution(FamilySpec.from_dict(data), eps)

    @classmethod
    def from_json(cls, text, eps_trunc=None):
        return cls.from_dict(json.loads(text), eps_trunc)


def point_mass(k):
    """The Dirac distribution at the integer ``k``."""
    return Distribution(int(k), [1.0], 0.0, label=f"delta_{int(k)}")


def make_distribution(spec, eps_trunc=DEFAULT_EPS):
    """Build the truncated pmf for ``spec``.

    The window is chosen so that the mass dropped on both sides is at most
    ``eps_trunc``; probabilities are formed from log-pmf values.
    """
    if not 0.0 < eps_trunc <= 1e-6:
        raise ConfigError(f"eps_trunc must lie in (0, 1e-6], got {eps_trunc}")
    if spec.kind == "explicit":
        p = spec.params
        return Distribution(int(p.get("offset", 0)), p["pmf"], float(p.get("tail_mass", 0.0)),
                            label="explicit", family=spec, eps_trunc=eps_trunc)

    rv = spec.frozen()
    mean, var = (float(v) for v in rv.stats("mv"))
    upper = _outer_cut(rv, spec, mean, var, eps_trunc)
    x = np.arange(upper + 1)
    lp = family_logpmf(spec)(x)
    p = np.exp(lp)

    # drop from the top while the dropped mass stays within half the budget and its
    # second moment within half the budget times E[X^2], so mean and variance keep
    # an absolute error of order eps * (mean^2 + var)
    far = float(np.exp(rv.logsf(upper)))
    budget = 0.5 * eps_trunc
    top_tail = np.cumsum(p[::-1])[::-1] + far  # mass at >= x
    xf = x.astype(float)
    top_m2 = np.cumsum((xf * xf * p)[::-1])[::-1] + far * float(upper + 1) ** 2
    m2_budget = budget * max(mean * mean + var, 1e-300)
    keep_hi = np.nonzero((top_tail > budget) | (top_m2 > m2_budget))[0]
    hi = int(keep_hi[-1]) if keep_hi.size else 0
    bot_tail = np.cumsum(p)  # mass at <= x
    keep_lo = np.nonzero(bot_tail > budget)[0]
    lo = int(keep_lo[0]) if keep_lo.size else 0
    lo = min(lo, hi)
    dropped = (bot_tail[lo - 1] if lo > 0 else 0.0) + (top_tail[hi + 1] if hi + 1 <= upper else far)
    window = p[lo:hi + 1]
    # trim structural zeros (degenerate p = 0 or 1 cases)
    nz = np.nonzero(window > 0)[0]
    window = window[nz[0]:nz[-1] + 1]
    lo += int(nz[0])

    return Distribution(lo, window, float(dropped), label=_label(spec), family=spec,
                        eps_trunc=eps_trunc, logpmf_fn=family_logpmf(spec))


def family_logpmf(spec):
    """Vectorized exact log-pmf of a parametric family, accurate for large n."""
    p = spec.params
    if spec.kind == "poisson":
        lam = p["lam"]
        return lambda k: _on_n0(k, lambda kk: xlogy(kk, lam) - lam - gammaln(kk + 1.0))
    if spec.kind in ("binomial", "bernoulli"):
        n = p["n"] if spec.kind == "binomial" else 1
        return lambda k: _on_n0(k, lambda kk: _binom_logpmf(kk, n, p["p"]))
    if spec.kind in ("geometric", "negative_binomial"):
        r = p.get("r", 1.0)
        return lambda k: _on_n0(k, lambda kk: _nbinom_logpmf(kk, r, p["p"]))
    raise ParameterError("explicit families have no closed-form log-pmf")


def _on_n0(k, fn):
    k = np.asarray(k)
    out = np.full(k.shape, -np.inf)
    ok = k >= 0
    if np.any(ok):
        out[ok] = fn(k[ok].astype(float))
    return out


def _binom_logpmf(k, n, p):
    # log C(n,k) p^k q^(n-k) = k log(np) - log k! + sum_{i<k} log1p(-i/n) + (n-k) log1p(-p)
    out = np.full(k.shape, -np.inf)
    ok = k <= n
    if p == 0.0 or p == 1.0:
        target = 0 if p == 0.0 else n
        out[k == target] = 0.0
        return out
    kk = k[ok]
    if kk.size == 0:
        return out
    top = int(kk.max())
    corr = np.concatenate(([0.0], np.cumsum(np.log1p(-np.arange(top) / n))))
    log_np = math.log(n) + math.log(p)
    out[ok] = kk * log_np - gammaln(kk + 1.0) + corr[kk.astype(int)] + xlog1py(n - kk, -p)
    return out


def _nbinom_logpmf(k, r, p):
    # Gamma(k+r)/(Gamma(r) k!) p^r q^k with Gamma(k+r)/Gamma(r) = r^k prod_{i<k} (1 + i/r)
    if p == 1.0:
        return np.where(k == 0, 0.0, -np.inf)
    top = int(k.max()) if k.size else 0
    corr = np.concatenate(([0.0], np.cumsum(np.log1p(np.arange(top) / r))))
    return (k * (math.log(r) + math.log1p(-p)) - gammaln(k + 1.0) + corr[k.astype(int)]
            + r * math.log(p))


def _outer_cut(rv, spec, mean, var, eps):
    """An upper support point beyond which the mass is far below ``eps``."""
    if spec.kind == "bernoulli":
        return 1
    cap = spec.params["n"] if spec.kind == "binomial" else None
    target = math.log(eps) - 20.0
    m = int(math.ceil(mean + 10.0 * math.sqrt(max(var, 0.0)) + 20.0))
    while True:
        if cap is not None and m >= cap:
            return int(cap)
        if rv.logsf(m) < target:
            return m
        m *= 2


def _label(spec):
    args = ",".join(f"{k}={v}" for k, v in spec.params.items())
    return f"{spec.kind}({args})"


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    deficit: float
    negative_count: int
    min_entry: float
    tail_mass: float
    tail_within_budget: bool
    edges_positive: bool
    messages: tuple = ()


def validate(P, eps_trunc=None):
    """Check every Distribution invariant; never raises."""
    budget = P.eps_trunc if eps_trunc is None else eps_trunc
    pmf = P.pmf
    msgs = []
    neg = int(np.count_nonzero(pmf < 0))
    if neg:
        msgs.append(f"{neg} negative entries (min {pmf.min():.3e})")
    finite = bool(np.all(np.isfinite(pmf)))
    if not finite:
        msgs.append("non-finite entries")
    total = math.fsum(pmf.tolist()) + P.tail_mass
    deficit = 1.0 - total
    if abs(deficit) > NORMALIZATION_TOL:
        msgs.append(f"normalization deficit {deficit:.3e}")
    tail_ok = 0.0 <= P.tail_mass <= budget
    if not tail_ok:
        msgs.append(f"tail mass {P.tail_mass:.3e} outside [0, {budget:.1e}]")
    edges = pmf.size == 1 or (pmf[0] > 0 and pmf[-1] > 0)
    if not edges:
        msgs.append("window has zero edge entries")
    passed = finite and neg == 0 and abs(deficit) <= NORMALIZATION_TOL and tail_ok and edges
    return ValidationReport(passed, deficit, neg, float(pmf.min()), P.tail_mass, tail_ok,
                            bool(edges), tuple(msgs))


def require_valid(P, what="distribution"):
    report = validate(P)
    if not report.passed:
        raise InvalidDistributionError(f"invalid {what}: " + "; ".join(report.messages))
    return P


def summary_stats(P):
    """Mean and variance over the stored window.

    The truncation error of either moment is bounded by the tail mass times
    the relevant moment of the dropped region; for the adaptive windows of
    :func:`make_distribution` this is below ``10 * eps_trunc * (lam**2 + lam)``.
    """
    x = P.support.astype(float)
    p = P.pmf
    mean = math.fsum((x * p).tolist())
    var = math.fsum(((x - mean) ** 2 * p).tolist())
    return mean, var
