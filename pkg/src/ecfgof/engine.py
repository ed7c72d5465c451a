"""Monte Carlo test procedure: replicate aggregation and parametric bootstrap.

Random streams are keyed by role, so each replicate has its own stream:

* ``("statistic", r)``: the r-th null sample used against the data;
* ``("bootstrap", j)``: pseudo-data then the m null samples of repetition j;
* ``("bootstrap-redraw", j)``: the single retry when the pseudo-data has a
  singular covariance;
* ``("bhep", j)``: null samples for the BHEP reference distribution.

Results therefore do not depend on ``n_jobs`` or on evaluation order.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EstimationError
from .estimators import as_sample, moment_estimate, standardize
from .numerics import WeightKernel
from .samplers import FamilySpec, RngStream, sample_family
from .statistics import bhep_composite, replicate_statistics

log = logging.getLogger(__name__)

AGGREGATES = ("mean", "max")


@dataclass(frozen=True)
class TestConfig:
    """Settings of one Monte Carlo goodness-of-fit test."""

    family: FamilySpec = field(default_factory=FamilySpec)
    kernel: WeightKernel = field(default_factory=WeightKernel)
    m: int = 10
    M: int = 1000
    alpha: float = 0.05
    agg: str = "mean"
    seed: int = 0

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if int(self.M) < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.agg not in AGGREGATES:
            raise ValueError(f"agg must be one of {AGGREGATES}, got {self.agg!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def stream(self):
        return RngStream(self.seed)


@dataclass(frozen=True)
class TestOutcome:
    statistic: float
    critical_point: float
    p_value: float
    reject: bool
    m: int
    M: int
    alpha: float
    seed: int
    family: str
    kernel: str
    agg: str
    n: int
    p: int
    wall_time_s: float
    redraws: int = 0

    __test__ = False

    def to_dict(self):
        return asdict(self)


def aggregate(values, agg):
    values = np.asarray(values, dtype=float)
    if agg == "mean":
        return float(values.mean(axis=-1)) if values.ndim == 1 else values.mean(axis=-1)
    if agg == "max":
        return float(values.max(axis=-1)) if values.ndim == 1 else values.max(axis=-1)
    raise ValueError(f"unknown aggregate {agg!r}")


def _null_samples(family, n, p, m, g):
    std = family.standard()
    return np.stack([sample_family(n, std, g, p) for _ in range(m)])


def statistic_replicates(x, cfg, rng=None):
    """The m composite statistics of `x` against fresh null samples."""
    x = as_sample(x)
    n, p = x.shape
    base = cfg.stream if rng is None else rng
    xhat = standardize(x, moment_estimate(x, cfg.family))
    std = cfg.family.standard()
    x0s = np.stack(
        [sample_family(n, std, base.child("statistic", r).generator(), p) for r in range(cfg.m)]
    )
    return replicate_statistics(xhat, x0s, cfg.kernel)


def aggregate_statistic(x, cfg, rng=None):
    """Mean (or max) over m null replicates of the composite statistic."""
    return aggregate(statistic_replicates(x, cfg, rng), cfg.agg)


def _bootstrap_rep(j, n, p, cfg, base):
    std = cfg.family.standard()
    for attempt, tag in enumerate(("bootstrap", "bootstrap-redraw")):
        g = base.child(tag, j).generator()
        pseudo = sample_family(n, std, g, p)
        try:
            xhat = standardize(pseudo, moment_estimate(pseudo, cfg.family))
        except EstimationError:
            if attempt == 0:
                continue
            raise
        x0s = _null_samples(cfg.family, n, p, cfg.m, g)
        return replicate_statistics(xhat, x0s, cfg.kernel), attempt
    raise AssertionError("unreachable")  # pragma: no cover


def _bootstrap_chunk(args):
    lo, hi, n, p, cfg, base = args
    rows = np.empty((hi - lo, cfg.m))
    redraws = 0
    for j in range(lo, hi):
        rows[j - lo], extra = _bootstrap_rep(j, n, p, cfg, base)
        redraws += extra
    return rows, redraws


def _chunks(total, n_jobs):
    k = max(1, min(total, 4 * n_jobs))
    edges = np.linspace(0, total, k + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def bootstrap_replicates(n, p, cfg, rng=None, n_jobs=1):
    """All M x m null statistics of the parametric bootstrap.

    Returns
    -------
    stats : ndarray, shape (M, m)
        Row j holds the m statistics of bootstrap repetition j, so the
        null distribution of either aggregate can be formed from it.
    redraws : int
        Number of repetitions whose pseudo-data had to be redrawn.
    """
    n, p = int(n), int(p)
    if n < p + 1:
        raise ValueError(f"need n >= p + 1 for a nonsingular covariance, got n={n}, p={p}")
    base = cfg.stream if rng is None else rng
    tasks = [(lo, hi, n, p, cfg, base) for lo, hi in _chunks(cfg.M, n_jobs)]
    if n_jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(_bootstrap_chunk, tasks))
    else:
        parts = [_bootstrap_chunk(t) for t in tasks]
    stats = np.concatenate([rows for rows, _ in parts])
    redraws = sum(r for _, r in parts)
    if redraws:
        log.info("bootstrap redrew %d of %d pseudo-data samples", redraws, cfg.M)
    return stats, redraws


def empirical_quantile(values, level):
    """Inverse-CDF empirical quantile: the ceil(level * M)-th order statistic."""
    values = np.sort(np.asarray(values, dtype=float))
    k = max(1, math.ceil(round(level * values.size, 9)))
    return float(values[min(k, values.size) - 1])


def monte_carlo_p_value(statistic, null_stats):
    """``(1 + #{null >= statistic}) / (M + 1)``."""
    null_stats = np.asarray(null_stats, dtype=float)
    return (1.0 + np.count_nonzero(null_stats >= statistic)) / (null_stats.size + 1.0)


def bootstrap_critical(n, p, cfg, rng=None, n_jobs=1):
    """Bootstrap critical point and the M aggregated null statistics."""
    stats, _ = bootstrap_replicates(n, p, cfg, rng, n_jobs)
    null = aggregate(stats, cfg.agg)
    return empirical_quantile(null, 1.0 - cfg.alpha), null


def decide(statistic, null_stats, alpha):
    """Critical point, p-value and decision from a null distribution."""
    crit = empirical_quantile(null_stats, 1.0 - alpha)
    return crit, monte_carlo_p_value(statistic, null_stats), bool(statistic > crit)


def run_test(x, cfg, null_stats=None, n_jobs=1):
    """Full test of `x` against ``cfg.family``.

    Parameters
    ----------
    null_stats : array_like, optional
        Precomputed aggregated bootstrap statistics for the same
        ``(n, p, cfg)``; they do not depend on the data and can be reused.
    """
    start = time.perf_counter()
    x = as_sample(x)
    n, p = x.shape
    redraws = 0
    if null_stats is None:
        stats, redraws = bootstrap_replicates(n, p, cfg, n_jobs=n_jobs)
        null_stats = aggregate(stats, cfg.agg)
    statistic = aggregate_statistic(x, cfg)
    crit, pval, reject = decide(statistic, null_stats, cfg.alpha)
    return TestOutcome(
        statistic=float(statistic),
        critical_point=crit,
        p_value=float(pval),
        reject=reject,
        m=cfg.m,
        M=len(null_stats),
        alpha=cfg.alpha,
        seed=cfg.seed,
        family=str(cfg.family),
        kernel=str(cfg.kernel),
        agg=cfg.agg,
        n=n,
        p=p,
        wall_time_s=time.perf_counter() - start,
        redraws=redraws,
    )


def bhep_null_statistics(n, p, beta=1.0, M=1000, seed=0):
    """Null distribution of :func:`bhep_composite` from N_p(0, I) samples.

    The statistic is affine invariant, so the standard normal represents
    every member of the normal family.
    """
    base = RngStream(seed)
    normal = FamilySpec("normal")
    out = np.empty(M)
    for j in range(M):
        g = base.child("bhep", j).generator()
        for _ in range(2):
            try:
                out[j] = bhep_composite(sample_family(n, normal, g, p), beta)
                break
            except EstimationError:
                continue
        else:
            raise EstimationError(f"two singular normal samples in a row (n={n}, p={p})")
    return out


def bhep_test(x, beta=1.0, M=1000, alpha=0.05, seed=0, null_stats=None):
    """BHEP normality test calibrated by simulation under the null."""
    start = time.perf_counter()
    x = as_sample(x)
    n, p = x.shape
    if null_stats is None:
        null_stats = bhep_null_statistics(n, p, beta, M, seed)
    statistic = bhep_composite(x, beta)
    crit, pval, reject = decide(statistic, null_stats, alpha)
    return TestOutcome(
        statistic=float(statistic),
        critical_point=crit,
        p_value=float(pval),
        reject=reject,
        m=0,
        M=len(null_stats),
        alpha=alpha,
        seed=seed,
        family="normal",
        kernel=f"bhep:{beta:g}",
        agg="none",
        n=n,
        p=p,
        wall_time_s=time.perf_counter() - start,
    )
