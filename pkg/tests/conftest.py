import math

import numpy as np
import pytest
from scipy import stats

ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""
    def add(number, ok, detail):
        ACCEPTANCE_LINES.append((number, bool(ok), detail))
        return ok
    return add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


# --- oracles kept independent of the package ---------------------------------------

def poisson_pmf(lam, upper):
    return stats.poisson.pmf(np.arange(upper + 1), lam)


def direct_kl(p, q):
    """Plain sum p log(p/q) over p > 0."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    m = p > 0
    return float(np.sum(p[m] * np.log(p[m] / q[m])))


def direct_thin(pmf, alpha):
    """Definition of thinning as a double loop."""
    out = np.zeros(len(pmf))
    for l, pl in enumerate(pmf):
        for k in range(l + 1):
            out[k] += pl * math.comb(l, k) * alpha ** k * (1 - alpha) ** (l - k)
    return out


def charlier_explicit(lam, k, x):
    """C_k^lam(x) from the falling-factorial sum in exact rationals where possible."""
    from fractions import Fraction
    lam_f = Fraction(lam).limit_denominator(10 ** 12)
    total = Fraction(0)
    for l in range(k + 1):
        ff = 1
        for i in range(l):
            ff *= x - i
        total += math.comb(k, l) * (-lam_f) ** (k - l) * ff
    return float(total) / math.sqrt(float(lam_f) ** k * math.factorial(k))


def random_pmf(rng, width, conc=1.0):
    return rng.dirichlet(np.full(width, conc))
