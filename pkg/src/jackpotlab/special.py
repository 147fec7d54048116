"""Scalar special functions used by the interval and tail computations.

Everything here is implemented directly (log-gamma from the stdlib, the
regularized incomplete beta via the modified-Lentz continued fraction, beta
quantiles via safeguarded Newton/bisection, binomial tails via log-space
summation) so the statistical code does not depend on an external stats
library.
"""

from __future__ import annotations

import math

__all__ = [
    "log_beta",
    "betainc_reg",
    "beta_ppf",
    "log_binom_coeff",
    "binom_tail_upper",
    "binom_tail_lower",
    "chi2_sf_1df",
    "normal_sf",
    "NORMAL_CRIT_95",
]

_CF_EPS = 3e-15
_CF_FPMIN = 1e-300
_CF_MAX_ITER = 300

# Two-sided 95% critical value of the standard normal.
NORMAL_CRIT_95 = 1.959963984540054


def log_beta(a: float, b: float) -> float:
    """ln B(a, b) for a, b > 0."""
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction failed to converge (a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("betainc_reg requires a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def beta_ppf(q: float, a: float, b: float, *, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Quantile of Beta(a, b): the x with I_x(a, b) = q.

    Bracketed bisection refined by Newton steps on the regularized
    incomplete beta; absolute tolerance ``tol`` on x.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError("beta_ppf requires a > 0 and b > 0")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q={q} outside [0, 1]")
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0

    ln_b = log_beta(a, b)
    lo, hi = 0.0, 1.0
    x = a / (a + b)  # start from the mean
    for _ in range(max_iter):
        f = betainc_reg(a, b, x) - q
        if f > 0.0:
            hi = x
        else:
            lo = x
        # Newton step using the beta density; fall back to bisection when the
        # step leaves the bracket or the density underflows.
        x_new = None
        if 0.0 < x < 1.0:
            ln_pdf = (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - ln_b
            if ln_pdf > -700.0:
                pdf = math.exp(ln_pdf)
                if pdf > 0.0:
                    cand = x - f / pdf
                    if lo < cand < hi:
                        x_new = cand
        if x_new is None:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < tol or hi - lo < tol:
            return min(max(x_new, 0.0), 1.0)
        x = x_new
    return 0.5 * (lo + hi)


def log_binom_coeff(n: int, k: int) -> float:
    """ln C(n, k)."""
    if k < 0 or k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _logsumexp(values: list[float]) -> float:
    m = max(values)
    if m == -math.inf:
        return -math.inf
    return m + math.log(math.fsum(math.exp(v - m) for v in values))


def _binom_tail_direct(n: int, ks: range, p: float) -> float:
    lp = math.log(p)
    lq = math.log1p(-p)
    terms = [log_binom_coeff(n, k) + k * lp + (n - k) * lq for k in ks]
    return math.exp(_logsumexp(terms))


def binom_tail_upper(n: int, k: int, p: float) -> float:
    """P(X >= k) for X ~ Binomial(n, p), summed stably in log space.

    The sum runs over whichever tail has fewer terms; stays accurate for n
    into the thousands.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    n_upper = n - k + 1
    if n_upper <= k:  # upper tail is the smaller one
        return min(1.0, _binom_tail_direct(n, range(k, n + 1), p))
    return max(0.0, 1.0 - _binom_tail_direct(n, range(0, k), p))


def binom_tail_lower(n: int, k: int, p: float) -> float:
    """P(X <= k) for X ~ Binomial(n, p)."""
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    return max(0.0, min(1.0, 1.0 - binom_tail_upper(n, k + 1, p)))


def normal_sf(z: float) -> float:
    """Standard normal survival function P(Z > z)."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def chi2_sf_1df(w: float) -> float:
    """Survival function of chi-squared with one degree of freedom."""
    if w < 0.0:
        raise ValueError("chi-squared statistic must be >= 0")
    return math.erfc(math.sqrt(0.5 * w))
