"""Exact binomial distribution functions and one-sided Clopper-Pearson bounds.

Everything downstream (entailment labeling, calibration, certification) sits
on these three functions, so they are written against the exact binomial
CDF rather than a normal or Wilson approximation, and the confidence bounds
are found by bisection on that CDF instead of through a special-function
library. Bisection returns the conservative side of the root: the lower
bound never overshoots the defining supremum and the upper bound never
undershoots its infimum, so coverage is preserved at the stated level.
"""

from __future__ import annotations

import math
from functools import lru_cache

# Tail terms below this floor cannot move a CDF value by more than ~1e-13 in
# total (the remaining tail past the stopping point decays at least
# geometrically once the summation has passed the distribution mode).
_TERM_FLOOR = 1e-21

# Absolute bisection tolerance for both confidence bounds.
BISECTION_TOL = 1e-10


def _validate_counts(k: int, n: int) -> tuple[int, int]:
    k = int(k)
    n = int(n)
    if n < 1:
        raise ValueError(f"trials must be >= 1, got n={n}")
    if not 0 <= k <= n:
        raise ValueError(f"successes must satisfy 0 <= k <= n, got k={k}, n={n}")
    return k, n


def _validate_delta(delta: float) -> float:
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"confidence budget must lie in (0, 1), got {delta}")
    return delta


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirlerr(m: int) -> float:
    """lgamma(m+1) - ((m+0.5) log m - m + log(2 pi)/2, series for large m.

    The direct lgamma difference loses ~m*eps absolute accuracy for huge m;
    the asymptotic series is exact to double precision for m >= 16.
    """
    if m < 16:
        return math.lgamma(m + 1) - ((m + 0.5) * math.log(m) - m + _HALF_LOG_2PI)
    inv2 = 1.0 / (m * m)
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0
            - inv2 / 1188.0) * inv2) * inv2) * inv2) / m


def _bd0(x: float, mean: float) -> float:
    """Binomial deviance term x log(x/mean) + mean - x, cancellation-free."""
    if abs(x - mean) < 0.1 * (x + mean):
        v = (x - mean) / (x + mean)
        s = (x - mean) * v
        ej = 2.0 * x * v
        j = 1
        while True:
            ej *= v * v
            s_next = s + ej / (2 * j + 1)
            if s_next == s:
                return s_next
            s = s_next
            j += 1
    return x * math.log(x / mean) + mean - x


def _log_pmf(i: int, n: int, theta: float) -> float:
    """Saddle-point evaluation of log C(n,i) + i log(theta) + (n-i) log(1-theta).

    Relative accuracy ~1e-15 uniformly in n, unlike the naive lgamma
    difference whose error grows with lgamma(n) ~ n log n.
    """
    if i == 0:
        return n * math.log1p(-theta)
    if i == n:
        return n * math.log(theta)
    return (_stirlerr(n) - _stirlerr(i) - _stirlerr(n - i)
            - _bd0(i, n * theta) - _bd0(n - i, n * (1.0 - theta))
            + 0.5 * math.log(n / (2.0 * math.pi * i * (n - i))))


def binom_cdf(k: int, n: int, theta: float) -> float:
    """F(k; n, theta) = sum_{i<=k} C(n,i) theta^i (1-theta)^(n-i).

    Sums whichever tail is shorter, walking away from the mode so terms are
    monotonically decreasing and the summation can stop once terms fall
    below the accuracy floor. Accurate to ~1e-13 absolute up to n = 1e6.
    """
    k, n = _validate_counts(k, n)
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"success probability must lie in [0, 1], got {theta}")
    if theta <= 0.0:
        return 1.0
    if theta >= 1.0:
        return 1.0 if k == n else 0.0
    if k == n:
        return 1.0

    mode = math.floor((n + 1) * theta)

    terms: list[float] = []
    if k < mode:
        # Lower tail, descending from i = k: every term ratio pmf(i-1)/pmf(i)
        # equals (i (1-theta)) / ((n-i+1) theta) < 1 for i <= mode.
        t = math.exp(_log_pmf(k, n, theta))
        i = k
        while i >= 0 and t > _TERM_FLOOR:
            terms.append(t)
            t *= (i * (1.0 - theta)) / ((n - i + 1) * theta)
            i -= 1
        return min(1.0, math.fsum(terms))

    # Upper tail, ascending from i = k+1 > mode, terms decreasing upward.
    t = math.exp(_log_pmf(k + 1, n, theta))
    i = k + 1
    while i <= n and t > _TERM_FLOOR:
        terms.append(t)
        t *= ((n - i) * theta) / ((i + 1) * (1.0 - theta))
        i += 1
    return max(0.0, 1.0 - math.fsum(terms))


@lru_cache(maxsize=None)
def _cp_lower(k: int, n: int, delta: float) -> float:
    if k == 0:
        # P{X >= 0} = 1 > delta for every theta: the defining set is empty.
        return 0.0
    if k == n:
        # P{X >= n} = theta^n <= delta  <=>  theta <= delta^(1/n).
        return delta ** (1.0 / n)
    # Largest theta with P{Bin(n, theta) >= k} <= delta. The survival
    # probability 1 - F(k-1) is increasing in theta, so bisect and return
    # the feasible (lower) side of the bracket.
    lo, hi = 0.0, 1.0
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if 1.0 - binom_cdf(k - 1, n, mid) <= delta:
            lo = mid
        else:
            hi = mid
    return lo


@lru_cache(maxsize=None)
def _cp_upper(k: int, n: int, delta: float) -> float:
    if k == n:
        # F(n; n, theta) = 1 > delta for every theta: the set is empty.
        return 1.0
    if k == 0:
        # F(0; n, theta) = (1-theta)^n <= delta  <=>  theta >= 1 - delta^(1/n).
        return 1.0 - delta ** (1.0 / n)
    # Smallest theta with F(k; n, theta) <= delta; F is decreasing in theta,
    # so return the feasible (upper) side of the bracket.
    lo, hi = 0.0, 1.0
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if binom_cdf(k, n, mid) <= delta:
            hi = mid
        else:
            lo = mid
    return hi


def clopper_pearson_lower(k: int, n: int, delta: float) -> float:
    """One-sided exact lower confidence bound for a binomial proportion.

    Returns the largest theta with P{Bin(n, theta) >= k} <= delta (0 when
    k = 0, where the defining set is empty). Satisfies
    P{theta_L <= theta_true} >= 1 - delta for every theta_true.
    """
    k, n = _validate_counts(k, n)
    return _cp_lower(k, n, _validate_delta(delta))


def clopper_pearson_upper(k: int, n: int, delta: float) -> float:
    """One-sided exact upper confidence bound for a binomial proportion.

    Returns the smallest theta with P{Bin(n, theta) <= k} <= delta (1 when
    k = n). Mirror of the lower bound: theta_U(k) = 1 - theta_L(n-k).
    """
    k, n = _validate_counts(k, n)
    return _cp_upper(k, n, _validate_delta(delta))
