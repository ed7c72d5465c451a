"""Reproducible random generation for the null families and alternatives.

Every sampler takes either an :class:`RngStream` (a fresh generator is
started from its key) or a live ``numpy.random.Generator`` (consumed in
place). The elliptical samplers share one recipe: a spherical draw ``Y`` at
``(0, I)`` is mapped to ``delta + V^{1/2} Y``.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .numerics import SymPosDef, sqrtm

_MASK64 = (1 << 64) - 1


# --------------------------------------------------------------------------
# random streams


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by ``(master_seed, stream_id)``.

    Backed by Philox with the 128-bit key ``master_seed << 64 | stream_id``,
    so the stream only depends on its key and never on how many other
    streams exist or which worker draws from it.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = int(getattr(self, name))
            if not 0 <= value <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")
            object.__setattr__(self, name, value)

    def generator(self):
        """A new generator positioned at the start of this stream."""
        key = (self.master_seed << 64) | self.stream_id
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *parts):
        """Stream with the same master seed and an id derived from `parts`."""
        return RngStream(self.master_seed, stream_id(self.stream_id, *parts))


def stream_id(*parts):
    """Stable 64-bit id from a tuple of ints/strings/floats.

    Used to key replicate streams by ``(phase, trial, replicate, ...)`` so
    changing one loop bound never shifts another loop's streams.
    """
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


# --------------------------------------------------------------------------
# null families

NORMAL, LAPLACE, STUDENT_T, KOTZ = "normal", "laplace", "studentt", "kotz"
FAMILIES = (NORMAL, LAPLACE, STUDENT_T, KOTZ)


@dataclass(frozen=True)
class FamilySpec:
    """An elliptical family with its fixed hyperparameters.

    ``nu`` is the Student-t degrees of freedom, ``N`` the Kotz shape (with
    s=1, r=1/2). ``delta`` and ``V`` default to the standard member
    ``(0, I)`` when left as ``None``.
    """

    family: str = NORMAL
    nu: float | None = None
    N: float | None = None
    delta: np.ndarray | None = field(default=None, compare=False)
    V: SymPosDef | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == STUDENT_T:
            if self.nu is None or not self.nu > 2:
                raise ValueError(f"Student-t family needs nu > 2, got {self.nu}")
            object.__setattr__(self, "nu", float(self.nu))
        if self.family == KOTZ:
            if self.N is None or not self.N >= 1:
                raise ValueError(f"Kotz family needs N >= 1, got {self.N}")
            object.__setattr__(self, "N", float(self.N))
        if self.V is not None and not isinstance(self.V, SymPosDef):
            object.__setattr__(self, "V", SymPosDef(self.V))
        if self.delta is not None:
            object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float).ravel())

    @classmethod
    def parse(cls, text):
        """Parse ``normal``, ``laplace``, ``studentt:NU`` or ``kotz:N``."""
        name, _, arg = text.strip().lower().partition(":")
        name = {"t": STUDENT_T, "student": STUDENT_T, "gauss": NORMAL}.get(name, name)
        if name in (NORMAL, LAPLACE):
            if arg:
                raise ValueError(f"family {name!r} takes no parameter")
            return cls(name)
        if name == STUDENT_T:
            if not arg:
                raise ValueError("studentt needs degrees of freedom, e.g. studentt:12")
            return cls(STUDENT_T, nu=float(arg))
        if name == KOTZ:
            if not arg:
                raise ValueError("kotz needs N, e.g. kotz:2")
            return cls(KOTZ, N=float(arg))
        raise ValueError(f"unknown family {text!r}")

    def __str__(self):
        if self.family == STUDENT_T:
            return f"studentt:{self.nu:g}"
        if self.family == KOTZ:
            return f"kotz:{self.N:g}"
        return self.family

    def covariance_factor(self, p):
        """Constant ``c`` with Cov X = c V, i.e. ``-2 Psi_0'(0)``."""
        if self.family == STUDENT_T:
            return self.nu / (self.nu - 2.0)
        if self.family == KOTZ:
            return (2.0 * self.N + p - 2.0) / p
        return 1.0

    def location(self, p):
        if self.delta is None:
            return np.zeros(p)
        if self.delta.shape != (p,):
            raise ValueError(f"location has dimension {self.delta.size}, expected {p}")
        return self.delta

    def scatter(self, p):
        if self.V is None:
            return SymPosDef.identity(p)
        if self.V.dim != p:
            raise ValueError(f"scatter has dimension {self.V.dim}, expected {p}")
        return self.V

    def standard(self):
        """The same family at ``(0, I)``."""
        return FamilySpec(self.family, nu=self.nu, N=self.N)


def _affine(y, spec, p):
    delta = spec.location(p)
    v = spec.scatter(p)
    if np.array_equal(v.matrix, np.eye(p)):
        return y + delta
    return y @ sqrtm(v).matrix + delta


def _check_n_p(n, p):
    n, p = int(n), int(p)
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    return n, p


def sample_sphere(p, rng, size=None):
    """Uniform draw(s) on the unit sphere in R^p.

    Returns a vector of length `p`, or an array of shape ``(size, p)``.
    """
    g = as_generator(rng)
    n = 1 if size is None else int(size)
    z = g.standard_normal((n, int(p)))
    norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    # a zero normal vector has probability zero; redraw to be exact anyway
    while np.any(norms == 0.0):
        bad = norms == 0.0
        z[bad] = g.standard_normal((int(bad.sum()), int(p)))
        norms = np.sqrt(np.einsum("ij,ij->i", z, z))
    u = z / norms[:, None]
    return u[0] if size is None else u


def sample_mvnormal(n, spec, rng, p=None):
    """Rows i.i.d. N_p(delta, V), generated as delta + V^{1/2} Z."""
    p = _dim(spec, p)
    n, p = _check_n_p(n, p)
    g = as_generator(rng)
    return _affine(g.standard_normal((n, p)), spec, p)


def sample_mvlaplace(n, spec, rng, p=None, mixing=None):
    """Multivariate Laplace with mean delta and covariance V.

    Drawn as ``delta + sqrt(W) V^{1/2} Z`` with ``W ~ Exp(1)``. Passing a
    constant `mixing` replaces ``W`` by that value (``mixing=1`` gives the
    normal).
    """
    p = _dim(spec, p)
    n, p = _check_n_p(n, p)
    g = as_generator(rng)
    z = g.standard_normal((n, p))
    w = g.standard_exponential(n) if mixing is None else np.full(n, float(mixing))
    return _affine(np.sqrt(w)[:, None] * z, spec, p)


def sample_mvt(n, spec, rng, p=None, nu=None):
    """Multivariate Student-t: ``delta + V^{1/2} Z / sqrt(W/nu)``, W ~ chi2_nu.

    ``nu=inf`` fixes ``W/nu = 1`` and reproduces the normal sampler.
    """
    p = _dim(spec, p)
    nu = spec.nu if nu is None else nu
    if nu is None or not nu > 0:
        raise ValueError(f"Student-t generation needs nu > 0, got {nu}")
    n, p = _check_n_p(n, p)
    g = as_generator(rng)
    z = g.standard_normal((n, p))
    if np.isinf(nu):
        return _affine(z, spec, p)
    w = 2.0 * g.standard_gamma(nu / 2.0, n)
    return _affine(z / np.sqrt(w / nu)[:, None], spec, p)


def kotz_radius_squared(n, p, N, rng):
    """R^2 ~ Gamma(shape N + p/2 - 1, rate 1/2) for the Kotz representation."""
    shape = N + p / 2.0 - 1.0
    if not shape > 0:
        raise ValueError(f"Kotz generation needs N + p/2 - 1 > 0, got {shape}")
    return 2.0 * as_generator(rng).standard_gamma(shape, int(n))


def sample_kotz(n, spec, rng, p=None, N=None):
    """Kotz-type (s=1, r=1/2): ``delta + V^{1/2} R U``, U uniform on the sphere."""
    p = _dim(spec, p)
    N = spec.N if N is None else N
    if N is None:
        raise ValueError("Kotz generation needs N")
    n, p = _check_n_p(n, p)
    g = as_generator(rng)
    r2 = kotz_radius_squared(n, p, N, g)
    u = sample_sphere(p, g, size=n)
    return _affine(np.sqrt(r2)[:, None] * u, spec, p)


def sample_family(n, spec, rng, p=None):
    """Draw from the family described by `spec`."""
    if spec.family == NORMAL:
        return sample_mvnormal(n, spec, rng, p)
    if spec.family == LAPLACE:
        return sample_mvlaplace(n, spec, rng, p)
    if spec.family == STUDENT_T:
        return sample_mvt(n, spec, rng, p)
    return sample_kotz(n, spec, rng, p)


def _dim(spec, p):
    if p is not None:
        return int(p)
    if spec.V is not None:
        return spec.V.dim
    if spec.delta is not None:
        return spec.delta.size
    raise ValueError("dimension p is required when the family has no location/scatter")


# --------------------------------------------------------------------------
# alternatives


def sample_skew_t(n, p, rng, slant, nu, location=None, scale=None):
    """Azzalini skew-t ST_p(location, scale, slant, nu).

    Slant-conditioning construction: ``(U0, Z0)`` jointly normal with
    ``Z0 ~ N(0, Omega_bar)`` and ``corr(U0, Z0) = d``,
    ``d = Omega_bar a / sqrt(1 + a' Omega_bar a)``; reflect ``Z0`` when
    ``U0 <= 0`` and divide by ``sqrt(W/nu)``. Here `slant` is the ``alpha``
    vector of the ``sn`` package convention and `scale` is ``Omega``.
    """
    n, p = _check_n_p(n, p)
    g = as_generator(rng)
    a = np.broadcast_to(np.asarray(slant, dtype=float), (p,))
    omega_full = np.eye(p) if scale is None else np.asarray(SymPosDef(scale).matrix)
    w_sd = np.sqrt(np.diag(omega_full))
    omega_bar = omega_full / np.outer(w_sd, w_sd)
    oa = omega_bar @ a
    d = oa / np.sqrt(1.0 + a @ oa)
    u0 = g.standard_normal(n)
    resid = omega_bar - np.outer(d, d)
    z1 = g.standard_normal((n, p)) @ sqrtm(resid).matrix
    z0 = u0[:, None] * d + z1
    z = np.where((u0 > 0)[:, None], z0, -z0)
    if not np.isinf(nu):
        w = 2.0 * g.standard_gamma(nu / 2.0, n)
        z = z / np.sqrt(w / nu)[:, None]
    x = z * w_sd
    if location is not None:
        x = x + np.asarray(location, dtype=float)
    return x


def _normal_mixture(n, p, g, theta):
    z = g.standard_normal((n, p))
    shift = g.random(n) < 0.5
    return z + theta * shift[:, None]


def _uniform(n, p, g):
    return g.random((n, p))


def _mar_exp(n, p, g):
    x = g.standard_normal((n, p))
    x[:, -1] = g.standard_exponential(n)
    return x


def _laplace_normal_mixture(n, p, g, theta):
    lap = sample_mvlaplace(n, FamilySpec(LAPLACE), g, p)
    gauss = g.standard_normal((n, p))
    pick = g.random(n) < theta
    return np.where(pick[:, None], gauss, lap)


def _correlated_normal(n, p, g, rho=0.5, shift="ep"):
    cov = np.full((p, p), float(rho))
    np.fill_diagonal(cov, 1.0)
    loc = np.arange(1.0, p + 1.0) if shift == "ep" else np.asarray(shift, dtype=float)
    spec = FamilySpec(NORMAL, delta=np.broadcast_to(loc, (p,)), V=cov)
    return sample_mvnormal(n, spec, g, p)


@dataclass(frozen=True)
class AltSpec:
    """A named data generator with its parameters.

    Kinds
    -----
    ``normal``, ``laplace``, ``studentt`` (nu), ``kotz`` (N)
        The families at ``(0, I)``; ``studentt`` accepts ``nu=inf``.
    ``normal_mixture`` (theta)
        Balanced mixture of N_p(0, I) and N_p(theta 1, I).
    ``uniform``
        i.i.d. U(0, 1) coordinates.
    ``mar_exp``
        Standard normal with the last coordinate replaced by Exp(1).
    ``laplace_normal_mixture`` (theta)
        (1 - theta) Laplace(0, I) + theta N(0, I).
    ``skew_t`` (theta, nu=12)
        Skew-t at (0, I) with slant theta 1_p.
    ``correlated_normal`` (rho=0.5)
        N_p((1, ..., p), Sigma_rho), equicorrelated with unit variances.
    """

    kind: str
    params: tuple = ()

    def __init__(self, kind, **params):
        if kind not in _GENERATORS:
            raise ConfigError(f"unknown data generator {kind!r}; expected one of {sorted(_GENERATORS)}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(sorted(params.items())))

    def with_params(self, **params):
        merged = dict(self.params)
        merged.update(params)
        return AltSpec(self.kind, **merged)

    def __str__(self):
        if not self.params:
            return self.kind
        args = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.params)
        return f"{self.kind}({args})"


def _gen_family(name):
    def gen(n, p, g, **kw):
        if name == STUDENT_T:
            return sample_mvt(n, FamilySpec(NORMAL), g, p, nu=float(kw.pop("nu")))
        if name == KOTZ:
            return sample_kotz(n, FamilySpec(NORMAL), g, p, N=float(kw.pop("N")))
        return sample_family(n, FamilySpec(name), g, p)

    return gen


_GENERATORS = {
    NORMAL: _gen_family(NORMAL),
    LAPLACE: _gen_family(LAPLACE),
    STUDENT_T: _gen_family(STUDENT_T),
    KOTZ: _gen_family(KOTZ),
    "normal_mixture": lambda n, p, g, theta: _normal_mixture(n, p, g, float(theta)),
    "uniform": lambda n, p, g: _uniform(n, p, g),
    "mar_exp": lambda n, p, g: _mar_exp(n, p, g),
    "laplace_normal_mixture": lambda n, p, g, theta: _laplace_normal_mixture(n, p, g, float(theta)),
    "skew_t": lambda n, p, g, theta, nu=12.0: sample_skew_t(n, p, g, float(theta), float(nu)),
    "correlated_normal": lambda n, p, g, rho=0.5: _correlated_normal(n, p, g, rho),
}


def sample_alternative(n, p, alt, rng):
    """Rows i.i.d. from the generator named by `alt` (an :class:`AltSpec`)."""
    if isinstance(alt, str):
        alt = AltSpec(alt)
    n, p = _check_n_p(n, p)
    gen = _GENERATORS.get(alt.kind)
    if gen is None:
        raise ConfigError(f"unknown data generator {alt.kind!r}")
    try:
        return gen(n, p, as_generator(rng), **dict(alt.params))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for generator {alt.kind!r}: {exc}") from None
