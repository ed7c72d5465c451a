"""Compiled pairwise kernel sums.

Kernel values lie in [0, 1], so every sum is accumulated exactly in 128-bit
fixed point: each term is scaled by 2**62 and truncated to an integer, and
integer addition is associative. Sums are therefore bit-identical under any
reordering of rows and for any thread count, and the only rounding left is
the final conversion to float (plus a truncation below 2**-62 per term).
"""

import math

import numba as nb
import numpy as np

# prefer OpenMP; probing an outdated TBB only produces a warning
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

# Parallel kernels are not cached: reloading a cached parfor that other cached
# functions were linked against can segfault after new specialisations.
PARALLEL_MIN_ROWS = 256

_SCALE = 4611686018427387904.0  # 2**62
_ZERO = np.uint64(0)
_ONE = np.uint64(1)


@nb.njit(cache=True, inline="always")
def _psi(kind, b, d2):
    if kind == 0:
        return math.exp(-0.5 * d2)
    if kind == 1:
        return math.exp(-(d2 ** (0.5 * b)))
    return (1.0 + d2) ** (-b)


@nb.njit(cache=True, inline="always")
def _sqdist(x, j, y, k):
    s = 0.0
    for l in range(x.shape[1]):
        d = x[j, l] - y[k, l]
        s += d * d
    return s


# --------------------------------------------------------------------------
# 128-bit unsigned accumulator as a (hi, lo) pair of uint64


@nb.njit(cache=True, inline="always")
def _add(hi, lo, q):
    lo2 = lo + q
    if lo2 < lo:
        hi += _ONE
    return hi, lo2


@nb.njit(cache=True, inline="always")
def _quant(v):
    return np.uint64(v * _SCALE)


@nb.njit(cache=True, inline="always")
def _to_float(hi, lo):
    return 4.0 * float(hi) + float(lo) / _SCALE


@nb.njit(cache=True)
def _diff_to_float(ahi, alo, bhi, blo):
    """``a - b`` for two accumulators, as a float."""
    if ahi > bhi or (ahi == bhi and alo >= blo):
        borrow = _ONE if alo < blo else _ZERO
        return _to_float(ahi - bhi - borrow, alo - blo)
    borrow = _ONE if blo < alo else _ZERO
    return -_to_float(bhi - ahi - borrow, blo - alo)


@nb.njit(cache=True)
def fixed_sum(values):
    """Order-independent sum of values in [0, 1]."""
    hi = _ZERO
    lo = _ZERO
    for v in values:
        hi, lo = _add(hi, lo, _quant(v))
    return _to_float(hi, lo)


# --------------------------------------------------------------------------
# double sums


@nb.njit(cache=True, inline="always")
def _row_within(x, j, kind, b):
    hi = _ZERO
    lo = _ZERO
    for k in range(j + 1, x.shape[0]):
        hi, lo = _add(hi, lo, _quant(_psi(kind, b, _sqdist(x, j, x, k))))
    return hi, lo


@nb.njit(cache=True, inline="always")
def _row_cross(x, j, y0, kind, b):
    hi = _ZERO
    lo = _ZERO
    for k in range(y0.shape[0]):
        hi, lo = _add(hi, lo, _quant(_psi(kind, b, _sqdist(x, j, y0, k))))
    return hi, lo


@nb.njit(cache=True)
def _reduce(his, los):
    hi = _ZERO
    lo = _ZERO
    for j in range(his.shape[0]):
        hi, lo = _add(hi, lo, los[j])
        hi += his[j]
    return hi, lo


@nb.njit(cache=True)
def _within_serial(x, kind, b):
    hi = _ZERO
    lo = _ZERO
    for j in range(x.shape[0]):
        rh, rl = _row_within(x, j, kind, b)
        hi, lo = _add(hi, lo, rl)
        hi += rh
    return hi, lo


@nb.njit(parallel=True)
def _within_parallel(x, kind, b):
    n = x.shape[0]
    his = np.zeros(n, dtype=np.uint64)
    los = np.zeros(n, dtype=np.uint64)
    for j in nb.prange(n):
        rh, rl = _row_within(x, j, kind, b)
        his[j] = rh
        los[j] = rl
    return _reduce(his, los)


@nb.njit(cache=True)
def _cross_serial(x, y0, kind, b):
    hi = _ZERO
    lo = _ZERO
    for j in range(x.shape[0]):
        rh, rl = _row_cross(x, j, y0, kind, b)
        hi, lo = _add(hi, lo, rl)
        hi += rh
    return hi, lo


@nb.njit(parallel=True)
def _cross_parallel(x, y0, kind, b):
    n = x.shape[0]
    his = np.zeros(n, dtype=np.uint64)
    los = np.zeros(n, dtype=np.uint64)
    for j in nb.prange(n):
        rh, rl = _row_cross(x, j, y0, kind, b)
        his[j] = rh
        los[j] = rl
    return _reduce(his, los)


@nb.njit(cache=True)
def _combine(wxh, wxl, w0h, w0l, ch, cl, coef):
    hi, lo = _add(wxh, wxl, w0l)
    return coef * _diff_to_float(hi + w0h, lo, ch, cl)


@nb.njit(cache=True)
def _within_float_serial(x, kind, b):
    hi, lo = _within_serial(x, kind, b)
    return _to_float(hi, lo)


@nb.njit
def _within_float_parallel(x, kind, b):
    hi, lo = _within_parallel(x, kind, b)
    return _to_float(hi, lo)


@nb.njit(cache=True)
def _cross_float_serial(x, y0, kind, b):
    hi, lo = _cross_serial(x, y0, kind, b)
    return _to_float(hi, lo)


@nb.njit
def _cross_float_parallel(x, y0, kind, b):
    hi, lo = _cross_parallel(x, y0, kind, b)
    return _to_float(hi, lo)


@nb.njit(cache=True)
def _two_sample_serial(x, x0, kind, b):
    wxh, wxl = _within_serial(x, kind, b)
    w0h, w0l = _within_serial(x0, kind, b)
    ch, cl = _cross_serial(x, x0, kind, b)
    return _combine(wxh, wxl, w0h, w0l, ch, cl, 2.0 / (x.shape[0] - 1.0))


@nb.njit
def _two_sample_parallel(x, x0, kind, b):
    wxh, wxl = _within_parallel(x, kind, b)
    w0h, w0l = _within_parallel(x0, kind, b)
    ch, cl = _cross_parallel(x, x0, kind, b)
    return _combine(wxh, wxl, w0h, w0l, ch, cl, 2.0 / (x.shape[0] - 1.0))


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def within_sum(x, kind, b):
    """Sum over j < k of Psi(||x_j - x_k||^2)."""
    x = _c(x)
    if x.shape[0] >= PARALLEL_MIN_ROWS:
        return _within_float_parallel(x, kind, b)
    return _within_float_serial(x, kind, b)


def cross_sum(x, y0, kind, b):
    """Sum over all (j, k) of Psi(||x_j - y0_k||^2)."""
    x, y0 = _c(x), _c(y0)
    if x.shape[0] >= PARALLEL_MIN_ROWS:
        return _cross_float_parallel(x, y0, kind, b)
    return _cross_float_serial(x, y0, kind, b)


def two_sample(x, x0, kind, b):
    """``2/(n-1) * (W(x) + W(x0) - C(x, x0))``, the difference taken exactly."""
    x, x0 = _c(x), _c(x0)
    if x.shape[0] >= PARALLEL_MIN_ROWS:
        return _two_sample_parallel(x, x0, kind, b)
    return _two_sample_serial(x, x0, kind, b)


@nb.njit(cache=True)
def replicate_statistics(xhat, x0s, kind, b):
    """Two-sample statistic of `xhat` against each null sample in `x0s`.

    ``x0s`` has shape ``(m, n, p)``; the within-sample sum of `xhat` is
    computed once and reused.
    """
    n = xhat.shape[0]
    m = x0s.shape[0]
    coef = 2.0 / (n - 1.0)
    wxh, wxl = _within_serial(xhat, kind, b)
    out = np.empty(m)
    for r in range(m):
        x0 = x0s[r]
        w0h, w0l = _within_serial(x0, kind, b)
        ch, cl = _cross_serial(xhat, x0, kind, b)
        out[r] = _combine(wxh, wxl, w0h, w0l, ch, cl, coef)
    return out


@nb.njit(cache=True)
def ecf_gap_moments(xhat, x0, t):
    """Sum and sum of squares over rows of ``t`` of ``n |phi_n(t) - phi_0n(t)|^2``."""
    n = xhat.shape[0]
    p = xhat.shape[1]
    total = 0.0
    total_sq = 0.0
    for i in range(t.shape[0]):
        dc = 0.0
        ds = 0.0
        for j in range(n):
            a = 0.0
            a0 = 0.0
            for l in range(p):
                a += t[i, l] * xhat[j, l]
                a0 += t[i, l] * x0[j, l]
            dc += math.cos(a) - math.cos(a0)
            ds += math.sin(a) - math.sin(a0)
        g = (dc * dc + ds * ds) / n
        total += g
        total_sq += g * g
    return total, total_sq
