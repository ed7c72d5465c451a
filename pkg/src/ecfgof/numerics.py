"""Small symmetric positive-definite matrices and the weight kernels Psi.

Eigendecompositions use cyclic Jacobi rotations, which are accurate and
simple for the handful of dimensions a goodness-of-fit problem involves.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NearSingularError

MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-14
SYMMETRY_TOL = 1e-12
SINGULAR_TOL = 1e-12
MAX_DIM = 64


def jacobi_eigh(a, max_sweeps=MAX_SWEEPS, tol=OFFDIAG_TOL):
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.

    Parameters
    ----------
    a : array_like, shape (p, p)
        Symmetric matrix. Only read, never modified.
    max_sweeps : int
        Iteration cap; exceeding it raises :class:`ConvergenceError`.
    tol : float
        Convergence when the off-diagonal Frobenius mass drops below
        ``tol * ||a||_F``.

    Returns
    -------
    eigenvalues : ndarray, shape (p,)
        In descending order.
    eigenvectors : ndarray, shape (p, p)
        Orthogonal; column ``k`` pairs with ``eigenvalues[k]``.
    """
    a = np.array(a, dtype=float)
    p = a.shape[0]
    v = np.eye(p)
    scale = np.linalg.norm(a)
    if scale == 0.0 or p == 1:
        return np.diag(a).copy(), v

    offdiag = ~np.eye(p, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[offdiag] ** 2))
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                apq = a[i, j]
                if apq == 0.0:
                    continue
                g = 100.0 * abs(apq)
                if abs(a[i, i]) + g == abs(a[i, i]) and abs(a[j, j]) + g == abs(a[j, j]):
                    # below rounding of both diagonal entries
                    a[i, j] = a[j, i] = 0.0
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / abs(theta)
                else:
                    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ai = a[:, i].copy()
                a[:, i] = c * ai - s * a[:, j]
                a[:, j] = s * ai + c * a[:, j]
                ai = a[i, :].copy()
                a[i, :] = c * ai - s * a[j, :]
                a[j, :] = s * ai + c * a[j, :]
                a[i, j] = a[j, i] = 0.0
                vi = v[:, i].copy()
                v[:, i] = c * vi - s * v[:, j]
                v[:, j] = s * vi + c * v[:, j]
    else:
        off = np.sqrt(np.sum(a[offdiag] ** 2))
        if off > tol * scale:
            raise ConvergenceError("Jacobi eigensolver did not converge", max_sweeps)

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return lam[order], v[:, order]


class SymPosDef:
    """Immutable symmetric positive-definite matrix with cached eigenpairs.

    The input is symmetrised by averaging with its transpose; inputs whose
    asymmetry exceeds a relative 1e-12 are rejected rather than silently
    repaired.
    """

    __slots__ = ("_m", "_lam", "_q")

    def __init__(self, entries):
        m = np.array(entries, dtype=float)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] > MAX_DIM:
            raise ValueError(f"dimension {m.shape[0]} exceeds the small-matrix limit {MAX_DIM}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix has non-finite entries")
        scale = max(np.max(np.abs(m)), np.finfo(float).tiny)
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * scale:
            raise ValueError("matrix is not symmetric")
        m = 0.5 * (m + m.T)
        lam, q = jacobi_eigh(m)
        if not lam[-1] > 0.0:
            raise NearSingularError(
                f"matrix is not positive definite (smallest eigenvalue {lam[-1]:.3e})"
            )
        self._set(m, lam, q)

    def _set(self, m, lam, q):
        for arr in (m, lam, q):
            arr.setflags(write=False)
        self._m, self._lam, self._q = m, lam, q

    @classmethod
    def _from_eigen(cls, lam, q):
        obj = cls.__new__(cls)
        m = (q * lam) @ q.T
        obj._set(0.5 * (m + m.T), np.array(lam, dtype=float), np.array(q, dtype=float))
        return obj

    @classmethod
    def identity(cls, p):
        return cls._from_eigen(np.ones(p), np.eye(p))

    @property
    def dim(self):
        return self._m.shape[0]

    @property
    def matrix(self):
        return self._m

    @property
    def eigenvalues(self):
        return self._lam

    @property
    def eigenvectors(self):
        return self._q

    def __array__(self, dtype=None, copy=None):
        return self._m if dtype is None else self._m.astype(dtype)

    def __repr__(self):
        return f"SymPosDef({self._m.tolist()!r})"


def _as_spd(a):
    return a if isinstance(a, SymPosDef) else SymPosDef(a)


def sym_eigen(a):
    """Eigenvalues (descending) and orthogonal eigenvectors of an SPD matrix."""
    a = _as_spd(a)
    return a.eigenvalues.copy(), a.eigenvectors.copy()


def inv_sqrt(a):
    """Unique symmetric positive-definite inverse square root of `a`.

    Raises
    ------
    NearSingularError
        If the smallest eigenvalue is below 1e-12.
    """
    a = _as_spd(a)
    lam = a.eigenvalues
    if lam[-1] < SINGULAR_TOL:
        raise NearSingularError(
            f"smallest eigenvalue {lam[-1]:.3e} is below {SINGULAR_TOL:g}"
        )
    return SymPosDef._from_eigen(1.0 / np.sqrt(lam), a.eigenvectors)


def sqrtm(a):
    """Unique symmetric positive-definite square root of `a`."""
    a = _as_spd(a)
    return SymPosDef._from_eigen(np.sqrt(a.eigenvalues), a.eigenvectors)


# --------------------------------------------------------------------------
# weight kernels

GAUSSIAN, STABLE, GEN_LAPLACE = "gaussian", "stable", "genlaplace"
_KERNEL_CODES = {GAUSSIAN: 0, STABLE: 1, GEN_LAPLACE: 2}
_KERNEL_ALIASES = {
    "gauss": GAUSSIAN,
    "gaussian": GAUSSIAN,
    "normal": GAUSSIAN,
    "stable": STABLE,
    "glaplace": GEN_LAPLACE,
    "genlaplace": GEN_LAPLACE,
    "laplace": GEN_LAPLACE,
}


@dataclass(frozen=True)
class WeightKernel:
    """Radial kernel Psi with Psi(||t||^2) the CF of a spherical law.

    ``gaussian``: exp(-xi/2); ``stable``: exp(-xi**(b/2)), b in (0, 2];
    ``genlaplace``: (1 + xi)**(-b), b > 0.
    """

    family: str = GAUSSIAN
    b: float = 2.0

    def __post_init__(self):
        if self.family not in _KERNEL_CODES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        b = float(self.b)
        object.__setattr__(self, "b", b)
        if self.family == STABLE and not 0.0 < b <= 2.0:
            raise ValueError(f"stable kernel needs b in (0, 2], got {b}")
        if self.family == GEN_LAPLACE and not b > 0.0:
            raise ValueError(f"generalized Laplace kernel needs b > 0, got {b}")

    @classmethod
    def gaussian(cls):
        return cls(GAUSSIAN)

    @classmethod
    def stable(cls, b):
        return cls(STABLE, b)

    @classmethod
    def gen_laplace(cls, b):
        return cls(GEN_LAPLACE, b)

    @classmethod
    def parse(cls, text):
        """Parse ``gauss``, ``stable:B`` or ``glaplace:B``."""
        name, _, arg = text.strip().lower().partition(":")
        family = _KERNEL_ALIASES.get(name)
        if family is None:
            raise ValueError(f"unknown kernel {text!r}")
        if family == GAUSSIAN:
            if arg:
                raise ValueError("the Gaussian kernel takes no parameter")
            return cls(GAUSSIAN)
        if not arg:
            raise ValueError(f"kernel {name!r} needs a parameter, e.g. {name}:1.0")
        return cls(family, float(arg))

    @property
    def code(self):
        return _KERNEL_CODES[self.family]

    def __str__(self):
        if self.family == GAUSSIAN:
            return "gauss"
        tag = "stable" if self.family == STABLE else "glaplace"
        return f"{tag}:{self.b:g}"

    def __call__(self, xi):
        return psi_eval(self, xi)


def psi_eval(kernel, xi):
    """Evaluate Psi at `xi` >= 0 (scalar or array)."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(np.isnan(xi)):
        raise ValueError("Psi is only defined for xi >= 0")
    if kernel.family == GAUSSIAN:
        out = np.exp(-xi / 2.0)
    elif kernel.family == STABLE:
        out = np.exp(-(xi ** (kernel.b / 2.0)))
    else:
        out = (1.0 + xi) ** (-kernel.b)
    return out if out.ndim else float(out)
