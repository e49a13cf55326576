"""
Bessel functions of the first kind, integer order.

Double precision: ascending power series below SPLIT and the Hankel
asymptotic expansion (truncated at its smallest term) above.  The series
cancels badly near the split (terms reach ~1e6 at x = 20), so it is summed
in extended precision.

Arbitrary precision (mpmath numbers): the power series alone, with the
working precision raised by the number of digits lost to cancellation.
"""

import math

import mpmath
import numpy as np

SPLIT = 20.0
_SERIES_DPS = 40


def _series_mp(n, x, dps):
    """sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!) at ``dps`` significant digits."""
    with mpmath.workdps(dps + int(abs(float(x)) / math.log(10)) + 10):
        x = mpmath.mpf(x)
        half = x / 2
        term = half**n / mpmath.factorial(n)
        total = term
        q = -half * half
        eps = mpmath.mpf(10) ** (-(dps + 5))
        k = 0
        while True:
            k += 1
            term = term * q / (k * (k + n))
            total += term
            if abs(term) < eps * abs(total) and k > abs(x):
                break
    return +total


def _asymptotic(n, x):
    """Hankel expansion J_n(x) ~ sqrt(2/(pi x)) (P cos chi - Q sin chi),
    each element truncated before its terms start to grow."""
    x = np.asarray(x, dtype=float)
    mu = 4.0 * n * n
    chi = x - (0.5 * n + 0.25) * math.pi
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    term = np.ones_like(x)
    last = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 200):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        active &= (mag < last) & (mag > 0)
        if not active.any():
            break
        last = np.where(active, mag, last)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            Q = Q + np.where(active, sign * term, 0.0)
        else:
            P = P + np.where(active, sign * term, 0.0)
        active &= mag > 1e-18
    return np.sqrt(2.0 / (math.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi))


def jn(n, x):
    """J_n(x) for integer n >= 0 and real x (scalar or array), double precision."""
    if n < 0:
        raise ValueError("only non-negative integer orders are supported")
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    a = np.abs(arr)
    out = np.empty_like(a)
    big = a >= SPLIT
    if big.any():
        out[big] = _asymptotic(n, a[big])
    for idx in zip(*np.nonzero(~big)):
        v = a[idx]
        out[idx] = float(_series_mp(n, v, _SERIES_DPS)) if v > 0 else float(n == 0)
    if n % 2:
        out = np.where(arr < 0, -out, out)
    return float(out[0]) if scalar else out


def j1(x):
    return jn(1, x)


def jn_mp(n, x, dps=None):
    """J_n(x) for an mpmath number, accurate to ``dps`` (default: current) digits."""
    dps = mpmath.mp.dps if dps is None else dps
    x = mpmath.mpf(x)
    if x < 0:
        val = _series_mp(n, -x, dps)
        return -val if n % 2 else val
    return _series_mp(n, x, dps)


def count_zeros(n, x_lo, x_hi, samples_per_unit=20):
    """Number of sign changes of J_n on (x_lo, x_hi], sampled on a uniform grid
    fine enough to separate zeros (spacing ~ pi)."""
    m = max(8, int(math.ceil((x_hi - x_lo) * samples_per_unit)))
    x = np.linspace(x_lo, x_hi, m + 1)
    v = jn(n, x)
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))
