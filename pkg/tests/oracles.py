"""Independent oracles for the test suite.

Everything here is deliberately written against *different* machinery than
the library under test: the normal tail goes through erfc, lattice tails
through exact rational arithmetic, weighted-sum enumeration through pure
Python loops over Fractions, and root finding through plain interval
bisection.  Agreement between these and the library is then evidence, not
circularity.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

# Tabulated upper normal tail at 5 (Abramowitz & Stegun style reference
# value); used to vet the erfc-based oracle itself.
Q5_TABULATED = 2.8665e-07


def normal_upper_tail(x: float) -> float:
    """Q(x) = P(N(0,1) >= x) via the C library's erfc (continued-fraction
    and rational-approximation based, accurate to ~1 ulp)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def binomial_upper_tail(n: int, p: Fraction | float, k: int) -> float:
    """P(Bin(n, p) >= k) as an exact rational, returned as float."""
    p = Fraction(p).limit_denominator(10**12) if not isinstance(p, Fraction) else p
    q = 1 - p
    total = Fraction(0)
    for j in range(max(k, 0), n + 1):
        total += math.comb(n, j) * p**j * q ** (n - j)
    return float(min(total, Fraction(1)))


def weighted_bernoulli_tail(weights, p, threshold: float) -> float:
    """P(sum_j W_j Z_j >= threshold) for independent Bernoulli(p) Z_j.

    Pure-Python enumeration over all 2^n outcomes with Fraction
    probabilities; independent of the library's vectorized enumeration.
    """
    pf = Fraction(p).limit_denominator(10**12)
    qf = 1 - pf
    total = Fraction(0)
    n = len(weights)
    for bits in itertools.product((0, 1), repeat=n):
        s = sum(w for w, b in zip(weights, bits) if b)
        if s >= threshold:
            k = sum(bits)
            total += pf**k * qf ** (n - k)
    return float(total)


def bisect_root(fun, lo: float, hi: float, tol: float = 1e-13, iters: int = 200) -> float:
    """Plain bisection for increasing fun with a sign change on [lo, hi]."""
    flo = fun(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if fun(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def central_diff(fun, x: float, h: float) -> float:
    return (fun(x + h) - fun(x - h)) / (2.0 * h)


def sample_skewness(x) -> float:
    import numpy as np

    z = (x - np.mean(x)) / np.std(x, ddof=1)
    return float(np.mean(z**3))


def sample_excess_kurtosis(x) -> float:
    import numpy as np

    z = (x - np.mean(x)) / np.std(x, ddof=1)
    return float(np.mean(z**4) - 3.0)
