"""Characteristic-function test statistics.

The two-sample statistic compares the data with an artificial sample drawn
from the null model through a radial kernel ``Psi``::

    T = 2/(n-1) * sum_{j<k} [Psi(|X_j - X_k|^2) + Psi(|X0_j - X0_k|^2)]
        - 2/(n-1) * sum_{j,k} Psi(|X_j - X0_k|^2)

It equals ``n/(n-1) * (T2 - 2)`` where ``T2`` is ``n`` times the weighted
L2 distance between the two empirical characteristic functions, the weight
being the spherical density whose CF is ``Psi(|t|^2)``.
:func:`t2_integral_oracle` estimates ``T2`` by Monte Carlo integration and
serves as an independent check of the closed-form double sums.
"""

import math

import numpy as np

from . import _kernels
from .estimators import as_sample, moment_estimate, standardize
from .numerics import GAUSSIAN, GEN_LAPLACE, STABLE, WeightKernel
from .samplers import FamilySpec, as_generator

MIN_ORACLE_DRAWS = 100


def _pair(x, x0):
    x = as_sample(x)
    x0 = as_sample(x0, "x0")
    if x.shape != x0.shape:
        raise ValueError(f"samples must have equal shapes, got {x.shape} and {x0.shape}")
    if x.shape[0] < 2:
        raise ValueError("need n >= 2 observations")
    return x, x0


def within_kernel_sum(x, kernel):
    """``sum_{j<k} Psi(||x_j - x_k||^2)``, exact up to the final rounding."""
    return _kernels.within_sum(as_sample(x), kernel.code, kernel.b)


def cross_kernel_sum(x, y, kernel):
    """``sum_{j,k} Psi(||x_j - y_k||^2)``, exact up to the final rounding."""
    return _kernels.cross_sum(as_sample(x), as_sample(y, "y"), kernel.code, kernel.b)


def t_psi_simple(x, x0, kernel=WeightKernel()):
    """Two-sample kernel statistic between data `x` and null sample `x0`.

    Both samples must have the same shape ``(n, p)`` with ``n >= 2``. The
    value is bounded below by ``-2n/(n-1)``, attained when the samples
    coincide as multisets.
    """
    x, x0 = _pair(x, x0)
    return _kernels.two_sample(x, x0, kernel.code, kernel.b)


def t_gauss_simple(x):
    """Closed-form statistic for the simple hypothesis N_p(0, I), Gaussian weight."""
    x = as_sample(x)
    n, p = x.shape
    if n < 2:
        raise ValueError("need n >= 2 observations")
    w = within_kernel_sum(x, WeightKernel.gaussian())
    sq = np.einsum("ij,ij->i", x, x)
    tail = _kernels.fixed_sum(np.exp(-sq / 4.0))
    return 2.0 / (n - 1.0) * w + n * 3.0 ** (-p / 2.0) - 2.0 ** (1.0 - p / 2.0) * tail


def t_psi_composite(x, x0, theta, kernel=WeightKernel()):
    """Statistic on the standardised data ``theta.v_hat^{-1/2}(x - theta.delta_hat)``.

    `x0` must be a sample from the standard member ``(0, I)`` of the null
    family.
    """
    return t_psi_simple(standardize(x, theta), x0, kernel)


def replicate_statistics(xhat, x0s, kernel=WeightKernel()):
    """:func:`t_psi_simple` of standardised `xhat` against each of ``x0s[r]``.

    Parameters
    ----------
    xhat : ndarray, shape (n, p)
    x0s : ndarray, shape (m, n, p)

    Returns
    -------
    ndarray, shape (m,)
    """
    xhat = np.ascontiguousarray(as_sample(xhat, "xhat"))
    x0s = np.ascontiguousarray(x0s, dtype=float)
    if x0s.ndim != 3 or x0s.shape[1:] != xhat.shape:
        raise ValueError(f"x0s must have shape (m, {xhat.shape[0]}, {xhat.shape[1]}), got {x0s.shape}")
    if xhat.shape[0] < 2:
        raise ValueError("need n >= 2 observations")
    return _kernels.replicate_statistics(xhat, x0s, kernel.code, kernel.b)


def bhep_composite(x, beta=1.0):
    """BHEP normality statistic with weight N(0, beta^{-2} I).

    The data are standardised with the sample mean and the divisor-n sample
    covariance before the closed form is evaluated.
    """
    x = as_sample(x)
    n, p = x.shape
    if n < 2:
        raise ValueError("need n >= 2 observations")
    beta = float(beta)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    y = standardize(x, moment_estimate(x, FamilySpec("normal")))
    b2 = beta * beta
    pairs = within_kernel_sum(beta * y, WeightKernel.gaussian())
    sq = np.einsum("ij,ij->i", y, y)
    middle = _kernels.fixed_sum(np.exp(-b2 * sq / (2.0 * (1.0 + b2))))
    return (
        (n + 2.0 * pairs) / n
        - 2.0 * (1.0 + b2) ** (-p / 2.0) * middle
        + n * (1.0 + 2.0 * b2) ** (-p / 2.0)
    )


# --------------------------------------------------------------------------
# Monte Carlo integration oracle


def positive_stable(alpha, size, rng):
    """Positive stable variates with Laplace transform ``exp(-s**alpha)``.

    Uses the Chambers-Mallows-Stuck construction in Kanter's form for the
    totally skewed case; ``alpha = 1`` is the point mass at one.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    g = as_generator(rng)
    if alpha == 1.0:
        return np.ones(size)
    u = g.uniform(0.0, math.pi, size)
    e = g.standard_exponential(size)
    return (
        np.sin(alpha * u)
        / np.sin(u) ** (1.0 / alpha)
        * (np.sin((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
    )


def draw_weight_points(kernel, size, p, rng):
    """Draw ``t`` from the spherical density whose CF is ``Psi(||t||^2)``.

    Gaussian: ``N(0, I)``. Stable(b): ``sqrt(2 S) Z`` with S positive stable
    of index b/2. Generalized Laplace(b): ``sqrt(2 G) Z`` with G ~ Gamma(b, 1).
    """
    g = as_generator(rng)
    z = g.standard_normal((size, p))
    if kernel.family == GAUSSIAN:
        return z
    if kernel.family == STABLE:
        mix = 2.0 * positive_stable(kernel.b / 2.0, size, g)
    elif kernel.family == GEN_LAPLACE:
        mix = 2.0 * g.standard_gamma(kernel.b, size)
    else:  # pragma: no cover
        raise ValueError(kernel.family)
    return np.sqrt(mix)[:, None] * z


def t2_integral_oracle(x_std, x0, kernel, n_mc, rng, return_stderr=False, chunk=1 << 16):
    """Monte Carlo estimate of ``n * int |phi_n(t) - phi_0n(t)|^2 w(t) dt``.

    ``phi_n`` and ``phi_0n`` are the empirical CFs of `x_std` and `x0`. Its
    expectation ``T2`` satisfies ``t_psi_simple(x_std, x0) = n/(n-1) (T2 - 2)``.

    Parameters
    ----------
    n_mc : int
        Number of draws of ``t``; at least 100.
    return_stderr : bool
        Also return the Monte Carlo standard error of the estimate.
    """
    x_std, x0 = _pair(x_std, x0)
    n_mc = int(n_mc)
    if n_mc < MIN_ORACLE_DRAWS:
        raise ValueError(f"n_mc must be at least {MIN_ORACLE_DRAWS}, got {n_mc}")
    g = as_generator(rng)
    p = x_std.shape[1]
    xs = np.ascontiguousarray(x_std)
    x0 = np.ascontiguousarray(x0)
    total = total_sq = 0.0
    done = 0
    while done < n_mc:
        size = min(chunk, n_mc - done)
        t = draw_weight_points(kernel, size, p, g)
        s, s2 = _kernels.ecf_gap_moments(xs, x0, t)
        total += s
        total_sq += s2
        done += size
    mean = total / n_mc
    if not return_stderr:
        return mean
    var = max(total_sq / n_mc - mean * mean, 0.0) * n_mc / (n_mc - 1)
    return mean, math.sqrt(var / n_mc)


def t_from_t2(t2, n):
    """``n/(n-1) (t2 - 2)``."""
    return n / (n - 1.0) * (t2 - 2.0)
