"""Moment estimation of location/scatter and standardisation of the data."""

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, NearSingularError
from .numerics import SINGULAR_TOL, SymPosDef, inv_sqrt
from .samplers import FamilySpec


def as_sample(x, name="x"):
    """Validate an ``(n, p)`` block of finite observations (1-D means p=1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError(f"{name} must be an (n, p) array with n, p >= 1, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


@dataclass(frozen=True)
class ThetaHat:
    """Estimated location ``delta_hat`` and scatter ``v_hat``."""

    delta_hat: np.ndarray
    v_hat: SymPosDef
    family: FamilySpec


def sample_covariance(x):
    """Covariance with divisor n: ``n^{-1} sum (X_j - mean)(X_j - mean)'``."""
    x = as_sample(x)
    centred = x - x.mean(axis=0)
    s = centred.T @ centred / x.shape[0]
    return 0.5 * (s + s.T)


def scatter_from_kernel_slope(s, dpsi0):
    """Generic moment estimator ``-S / (2 Psi_0'(0))``."""
    if not dpsi0 < 0:
        raise ValueError("Psi_0'(0) must be negative for a finite-variance family")
    return -np.asarray(s) / (2.0 * dpsi0)


def moment_estimate(x, family):
    """Moment estimates ``(mean, S_n / c)`` with c the family's covariance factor.

    Raises
    ------
    EstimationError
        If the sample covariance is singular (smallest eigenvalue < 1e-12).
    """
    x = as_sample(x)
    n, p = x.shape
    delta = x.mean(axis=0)
    s = sample_covariance(x)
    v = s / family.covariance_factor(p)
    try:
        v_hat = SymPosDef(v)
    except (NearSingularError, ValueError) as exc:
        raise EstimationError(f"sample covariance is singular (n={n}, p={p}): {exc}") from None
    if v_hat.eigenvalues[-1] < SINGULAR_TOL:
        raise EstimationError(
            f"sample covariance is singular (n={n}, p={p}); "
            f"smallest eigenvalue {v_hat.eigenvalues[-1]:.3e}"
        )
    return ThetaHat(delta, v_hat, family)


def standardize(x, theta):
    """Map each row to ``v_hat^{-1/2} (X_j - delta_hat)``."""
    x = as_sample(x)
    root = inv_sqrt(theta.v_hat).matrix
    return (x - theta.delta_hat) @ root
