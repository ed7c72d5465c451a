import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from ecfgof.estimators import moment_estimate, standardize
from ecfgof.numerics import WeightKernel, sqrtm
from ecfgof.samplers import FamilySpec, RngStream, sample_family
from ecfgof.statistics import (
    bhep_composite,
    cross_kernel_sum,
    positive_stable,
    replicate_statistics,
    t2_integral_oracle,
    t_from_t2,
    t_gauss_simple,
    t_psi_composite,
    t_psi_simple,
    within_kernel_sum,
)

from conftest import random_full_rank

GAUSS = WeightKernel.gaussian()
KERNELS = [GAUSS, WeightKernel.stable(1.0), WeightKernel.gen_laplace(1.0)]
NORMAL = FamilySpec("normal")


def brute_force(x, x0, kernel):
    """Plain double loop over the three sums."""
    n = len(x)
    d = lambda a, b: float(np.sum((a - b) ** 2))
    wx = sum(kernel(d(x[j], x[k])) for j in range(n) for k in range(j + 1, n))
    w0 = sum(kernel(d(x0[j], x0[k])) for j in range(n) for k in range(j + 1, n))
    c = sum(kernel(d(x[j], x0[k])) for j in range(n) for k in range(n))
    return 2.0 / (n - 1) * (wx + w0 - c)


# -- worked examples --------------------------------------------------------


def test_two_point_gaussian_example():
    x = np.zeros((2, 1))
    x0 = np.full((2, 1), math.sqrt(2.0))
    assert t_psi_simple(x, x0, GAUSS) == pytest.approx(4.0 - 8.0 * math.exp(-1.0), abs=1e-14)
    assert t_psi_simple(x, x0, GAUSS) == pytest.approx(1.05696, abs=5e-6)


def test_separated_limit_n2():
    x = np.zeros((2, 1))
    x0 = np.full((2, 1), 1e3)
    assert t_psi_simple(x, x0, GAUSS) == 4.0


def test_gauss_simple_example():
    x = np.zeros((2, 1))
    expected = 2.0 + 2.0 / math.sqrt(3.0) - 2.0 * math.sqrt(2.0)
    assert t_gauss_simple(x) == pytest.approx(expected, abs=1e-14)
    # quoted to six places as 0.326274; the exact value rounds to 0.326273
    assert t_gauss_simple(x) == pytest.approx(0.3262734137, abs=1e-10)


def test_gauss_simple_far_from_origin():
    x = np.array([[100.0, 0.0], [0.0, 100.0], [-100.0, 0.0]])
    assert t_gauss_simple(x) == pytest.approx(3 * 3.0 ** (-1.0), abs=1e-12)


def test_gauss_simple_is_normal_ecf_distance(rng):
    # n int |phi_n - exp(-|t|^2/2)|^2 phi(t) dt by quadrature, p = 1; the
    # simple statistic uses 2/(n-1) on the pair sum, so the two agree up to
    # the diagonal terms: T = n/(n-1)(I - 1) + ... ; compare through the
    # pair-sum-free identity instead.
    x = rng.standard_normal((6, 1))
    n = len(x)

    def integrand(t):
        re = np.mean(np.cos(t * x[:, 0])) - math.exp(-t * t / 2)
        im = np.mean(np.sin(t * x[:, 0]))
        return n * (re * re + im * im) * math.exp(-t * t / 2) / math.sqrt(2 * math.pi)

    integral = quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    pairs = within_kernel_sum(x, GAUSS)
    # integral = (n + 2 pairs)/n - 2^{1/2} sum e^{-x^2/4} + n 3^{-1/2}
    closed = t_gauss_simple(x) - 2.0 / (n - 1) * pairs + (n + 2 * pairs) / n
    assert closed == pytest.approx(integral, abs=1e-10)


def test_bhep_two_point_example():
    # frozen from a quadrature evaluation of n int |phi_n - phi_0|^2 w
    assert bhep_composite(np.array([[-1.0], [1.0]]), 1.0) == pytest.approx(0.087254562003129, abs=1e-12)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_bhep_matches_quadrature(beta, rng):
    x = rng.standard_normal(8)
    y = (x - x.mean()) / x.std()
    n = len(y)

    def integrand(t):
        re = np.mean(np.cos(t * y)) - math.exp(-t * t / 2)
        im = np.mean(np.sin(t * y))
        return n * (re * re + im * im) * math.exp(-t * t / (2 * beta**2)) / math.sqrt(2 * math.pi * beta**2)

    integral = quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    assert bhep_composite(x[:, None], beta) == pytest.approx(integral, abs=1e-9)


def test_bhep_beta_one_structure(rng):
    # at beta = 1 the middle and last coefficients are 2 * 2^{-p/2} and 3^{-p/2}
    for p in (1, 2, 3):
        y = rng.standard_normal((10, p))
        y = standardize(y, moment_estimate(y, NORMAL))
        n = len(y)
        pairs = within_kernel_sum(y, GAUSS)
        mid = np.exp(-np.sum(y**2, axis=1) / 4).sum()
        expected = (n + 2 * pairs) / n - 2 * 2 ** (-p / 2) * mid + n * 3 ** (-p / 2)
        assert bhep_composite(y, 1.0) == pytest.approx(expected, rel=1e-12)


def test_bhep_affine_invariant(rng):
    x = rng.standard_normal((25, 3))
    a = random_full_rank(rng, 3)
    assert bhep_composite(x @ a.T + 5.0) == pytest.approx(bhep_composite(x), rel=1e-9)


# -- structure --------------------------------------------------------------


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_matches_brute_force(kernel, rng):
    x = rng.standard_normal((13, 3))
    x0 = rng.standard_normal((13, 3))
    assert t_psi_simple(x, x0, kernel) == pytest.approx(brute_force(x, x0, kernel), rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("n", [2, 5, 50])
@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_coincident_samples_floor(n, kernel, rng):
    x = rng.standard_normal((n, 3))
    assert abs(t_psi_simple(x, x, kernel) + 2 * n / (n - 1)) <= 1e-12


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_symmetric_in_samples(kernel, rng):
    x = rng.standard_normal((20, 2))
    x0 = rng.standard_normal((20, 2))
    assert t_psi_simple(x, x0, kernel) == t_psi_simple(x0, x, kernel)


def test_row_permutation_bit_identical(rng):
    x = rng.standard_normal((30, 2))
    x0 = rng.standard_normal((30, 2))
    base = t_psi_simple(x, x0)
    for _ in range(5):
        perm = rng.permutation(30)
        assert t_psi_simple(x[perm], x0, GAUSS) == base
        assert t_psi_simple(x, x0[rng.permutation(30)], GAUSS) == base


def test_large_n_parallel_path(rng):
    # n >= 256 takes the parallel reduction; it must agree with numpy sums
    x = rng.standard_normal((300, 2))
    y = rng.standard_normal((300, 2))
    d = ((x[:, None, :] - y[None, :, :]) ** 2).sum(-1)
    assert cross_kernel_sum(x, y, GAUSS) == pytest.approx(np.exp(-d / 2).sum(), rel=1e-13)
    dx = ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)
    assert within_kernel_sum(x, GAUSS) == pytest.approx(np.triu(np.exp(-dx / 2), 1).sum(), rel=1e-13)
    assert cross_kernel_sum(x, y, GAUSS) == cross_kernel_sum(x, y, GAUSS)


@settings(max_examples=80, deadline=None)
@given(
    arrays(np.float64, (6, 2), elements=st.floats(-5, 5)),
    arrays(np.float64, (6, 2), elements=st.floats(-5, 5)),
    st.sampled_from(KERNELS),
)
def test_lower_bound(x, x0, kernel):
    n = len(x)
    assert t_psi_simple(x, x0, kernel) >= -2 * n / (n - 1) - 1e-12


def test_shape_errors():
    with pytest.raises(ValueError):
        t_psi_simple(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        t_psi_simple(np.zeros((1, 2)), np.zeros((1, 2)))


# -- composite --------------------------------------------------------------


def test_composite_identity_standardisation(rng):
    from ecfgof.estimators import ThetaHat
    from ecfgof.numerics import SymPosDef

    x = rng.standard_normal((15, 2))
    x0 = rng.standard_normal((15, 2))
    th = ThetaHat(np.zeros(2), SymPosDef.identity(2), NORMAL)
    assert t_psi_composite(x, x0, th) == t_psi_simple(x, x0)


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_translation_invariance(kernel, rng):
    x = rng.standard_normal((30, 3))
    x0 = rng.standard_normal((30, 3))
    b = rng.uniform(-10, 10, 3)
    t0 = t_psi_composite(x, x0, moment_estimate(x, NORMAL), kernel)
    t1 = t_psi_composite(x + b, x0, moment_estimate(x + b, NORMAL), kernel)
    assert abs(t1 - t0) <= 1e-12


def rotation_u(a, v_hat):
    """U = V^{1/2} A' (A V A')^{-1/2}, orthogonal."""
    from ecfgof.numerics import inv_sqrt

    return sqrtm(v_hat).matrix @ a.T @ inv_sqrt(a @ v_hat @ a.T).matrix


@pytest.mark.parametrize("kernel", KERNELS, ids=str)
def test_rotation_identity(kernel, rng):
    for _ in range(10):
        p = int(rng.integers(2, 4))
        x = rng.standard_normal((20, p)) @ random_full_rank(rng, p)
        x0 = rng.standard_normal((20, p))
        a = random_full_rank(rng, p)
        th = moment_estimate(x, NORMAL)
        u = rotation_u(a, th.v_hat.matrix)
        np.testing.assert_allclose(u @ u.T, np.eye(p), atol=1e-10)
        ax = x @ a.T
        lhs = t_psi_composite(ax, x0, moment_estimate(ax, NORMAL), kernel)
        rhs = t_psi_composite(x, x0 @ u.T, th, kernel)
        assert abs(lhs - rhs) <= 1e-9


def test_replicate_statistics_match_single(rng):
    xhat = rng.standard_normal((12, 2))
    x0s = rng.standard_normal((4, 12, 2))
    for kernel in KERNELS:
        reps = replicate_statistics(xhat, x0s, kernel)
        np.testing.assert_allclose(reps, [t_psi_simple(xhat, x0, kernel) for x0 in x0s], rtol=1e-13, atol=1e-14)


# -- integration oracle -----------------------------------------------------


def test_positive_stable_laplace_transform():
    g = np.random.default_rng(5)
    for alpha in (0.25, 0.5, 0.75):
        s = positive_stable(alpha, 200_000, g)
        for lam in (0.5, 1.0, 2.0):
            vals = np.exp(-lam * s)
            assert abs(vals.mean() - math.exp(-(lam**alpha))) <= 4 * vals.std() / math.sqrt(len(s))


def test_oracle_zero_for_identical(rng):
    x = rng.standard_normal((10, 2))
    assert t2_integral_oracle(x, x, GAUSS, 1000, rng) == 0.0
    assert t_from_t2(0.0, 10) == pytest.approx(-20 / 9)


def test_oracle_refuses_few_draws(rng):
    x = rng.standard_normal((5, 2))
    with pytest.raises(ValueError):
        t2_integral_oracle(x, x, GAUSS, 99, rng)


@pytest.mark.parametrize("kernel", KERNELS + [WeightKernel.stable(0.7), WeightKernel.gen_laplace(2.5)], ids=str)
def test_oracle_identity(kernel):
    g = RngStream(41).generator()
    n, p = 20, 2
    x = sample_family(n, NORMAL, g, p) * [1.5, 0.5] + 2.0
    th = moment_estimate(x, NORMAL)
    x0 = sample_family(n, NORMAL, g, p)
    xs = standardize(x, th)
    est, se = t2_integral_oracle(xs, x0, kernel, 400_000, g, return_stderr=True)
    closed = t_psi_composite(x, x0, th, kernel)
    assert abs(t_from_t2(est, n) - closed) <= 3 * n / (n - 1) * se
