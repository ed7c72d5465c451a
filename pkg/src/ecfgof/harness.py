"""CSV ingestion and power/size simulation experiments.

An experiment sweeps dimensions ``p``, sample sizes ``n`` and one data
generator parameter, runs ``trials`` independent datasets through every
configured test, and reports rejection rates. Data for trial ``i`` at a
grid point is keyed by ``("data", p, n, value, i)``, so rows never depend
on how trials are split across workers.
"""

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .engine import (
    TestConfig,
    aggregate,
    bhep_null_statistics,
    bootstrap_replicates,
    empirical_quantile,
    statistic_replicates,
)
from .errors import ConfigError, DataFormatError, NumericalError
from .numerics import WeightKernel
from .samplers import AltSpec, FamilySpec, RngStream, sample_alternative, stream_id
from .statistics import bhep_composite

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.01


# --------------------------------------------------------------------------
# CSV


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, return_header=False):
    """Read a rectangular numeric CSV into an ``(n, p)`` array.

    A first row containing any non-numeric cell is taken as a header. Blank
    lines are ignored.

    Raises
    ------
    DataFormatError
        On an empty file, ragged rows or non-numeric cells; the message
        names the 1-based row and column.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror or exc}") from None
    rows = [
        (i, [c.strip() for c in r])
        for i, r in enumerate(csv.reader(io.StringIO(text)), start=1)
        if r and any(c.strip() for c in r)
    ]
    if not rows:
        raise DataFormatError(f"{path} is empty")
    header = None
    if not all(_is_number(c) for c in rows[0][1]):
        header = rows[0][1]
        rows = rows[1:]
        if not rows:
            raise DataFormatError(f"{path} has a header but no data")
    width = len(header) if header is not None else len(rows[0][1])
    data = np.empty((len(rows), width))
    for k, (lineno, cells) in enumerate(rows):
        if len(cells) != width:
            raise DataFormatError(
                f"expected {width} columns, found {len(cells)}", row=lineno
            )
        for col, cell in enumerate(cells, start=1):
            try:
                data[k, col - 1] = float(cell)
            except ValueError:
                raise DataFormatError(f"non-numeric cell {cell!r}", row=lineno, column=col) from None
    if not np.all(np.isfinite(data)):
        bad = np.argwhere(~np.isfinite(data))[0]
        raise DataFormatError("non-finite value", row=rows[bad[0]][0], column=int(bad[1]) + 1)
    return (data, header) if return_header else data


def write_csv(path, x, header=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(header)
        for row in np.asarray(x):
            w.writerow([repr(float(v)) for v in row])


# --------------------------------------------------------------------------
# experiment specification


@dataclass(frozen=True)
class TestSpec:
    """One test variant in an experiment: ``kind`` is ``"mc"`` or ``"bhep"``."""

    name: str
    kind: str = "mc"
    agg: str = "mean"
    kernel: WeightKernel = field(default_factory=WeightKernel)
    m: int = 10
    beta: float = 1.0

    __test__ = False

    def __post_init__(self):
        if self.kind not in ("mc", "bhep"):
            raise ConfigError(f"test {self.name!r}: unknown type {self.kind!r}")
        if self.kind == "mc" and self.agg not in ("mean", "max"):
            raise ConfigError(f"test {self.name!r}: agg must be mean or max")


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    null: FamilySpec
    generator: AltSpec
    param: str | None
    grid: tuple
    dims: tuple
    sizes: tuple
    tests: tuple
    trials: int = 200
    M: int = 500
    alpha: float = 0.05
    seed: int = 0
    share_bootstrap: bool = True

    def __post_init__(self):
        if not self.grid or not self.dims or not self.sizes or not self.tests:
            raise ConfigError("grid, dims, sizes and tests must all be nonempty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.M < 1:
            raise ConfigError("M must be >= 1")
        names = [t.name for t in self.tests]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate test names in {names}")
        if any(t.kind == "bhep" for t in self.tests) and self.null.family != "normal":
            raise ConfigError("BHEP is only defined for a normal null")

    def point(self, value):
        """Data generator at one grid value."""
        if self.param is None:
            return self.generator
        return self.generator.with_params(**{self.param: value})


def _as_tuple(value, key):
    if isinstance(value, (list, tuple)):
        return tuple(value)
    if value is None:
        raise ConfigError(f"missing key {key!r}")
    return (value,)


def spec_from_dict(doc):
    """Build an :class:`ExperimentSpec` from parsed TOML."""
    try:
        null = FamilySpec.parse(doc["null"]["family"])
        data = doc["data"]
        fixed = dict(data.get("fixed", {}))
        generator = AltSpec(data["generator"], **fixed)
        param = data.get("param")
        grid = _as_tuple(data.get("grid", [None] if param is None else None), "data.grid")
        tests = []
        for t in doc["tests"]:
            kind = t.get("type", "mc")
            kernel = WeightKernel.parse(t.get("kernel", "gauss"))
            tests.append(
                TestSpec(
                    name=t["name"],
                    kind=kind,
                    agg=t.get("agg", "mean"),
                    kernel=kernel,
                    m=int(t.get("m", 10)),
                    beta=float(t.get("beta", 1.0)),
                )
            )
        return ExperimentSpec(
            name=doc.get("name", "experiment"),
            null=null,
            generator=generator,
            param=param,
            grid=grid,
            dims=tuple(int(p) for p in _as_tuple(doc.get("dims"), "dims")),
            sizes=tuple(int(n) for n in _as_tuple(doc.get("sizes"), "sizes")),
            tests=tuple(tests),
            trials=int(doc.get("trials", 200)),
            M=int(doc.get("M", 500)),
            alpha=float(doc.get("alpha", 0.05)),
            seed=int(doc.get("seed", 0)),
            share_bootstrap=bool(doc.get("share_bootstrap", True)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r} in experiment spec") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def shipped_specs():
    """Names of the experiment specs bundled with the package."""
    folder = resources.files("ecfgof") / "specs"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".toml"))


def load_spec(source):
    """Load a spec from a TOML path or the name of a bundled spec."""
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        bundled = resources.files("ecfgof") / "specs" / f"{source}.toml"
        if not bundled.is_file():
            raise ConfigError(f"no spec file {source!r}; bundled specs: {shipped_specs()}")
        text = bundled.read_text(encoding="utf-8")
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {source}: {exc}") from None
    return spec_from_dict(doc)


# --------------------------------------------------------------------------
# running


@dataclass(frozen=True)
class PowerRow:
    p: int
    n: int
    param: str
    value: float
    test: str
    rejection_rate: float
    trials: int
    mc_stderr: float
    failures: int = 0


class PowerTable(list):
    """Rows of rejection rates, one per ``(p, n, value, test)``."""

    columns = ("experiment", "p", "n", "param", "value", "test",
               "rejection_rate", "trials", "mc_stderr", "failures")

    def __init__(self, rows=(), name="experiment"):
        super().__init__(rows)
        self.name = name

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self:
            w.writerow([self.name, r.p, r.n, r.param, _fmt(r.value), r.test,
                        _fmt(r.rejection_rate), r.trials, _fmt(r.mc_stderr), r.failures])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def rate(self, test, value=None, p=None, n=None):
        """Rejection rate of the unique row matching the filters."""
        hits = [r for r in self if r.test == test
                and (value is None or _same(r.value, value))
                and (p is None or r.p == p) and (n is None or r.n == n)]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match test={test}, value={value}, p={p}, n={n}")
        return hits[0].rejection_rate


def _same(a, b):
    if a is None or b is None:
        return a is b
    return a == b or (math.isinf(a) and math.isinf(b) and a > 0 and b > 0)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _mc_groups(spec):
    """Tests sharing a replicate set: same (kernel, m)."""
    groups = {}
    for t in spec.tests:
        if t.kind == "mc":
            groups.setdefault((t.kernel, t.m), []).append(t)
    return groups


def _cell_cfg(spec, kernel, m, seed):
    return TestConfig(family=spec.null, kernel=kernel, m=m, M=spec.M, alpha=spec.alpha, seed=seed)


def _null_distributions(spec, p, n, tag, n_jobs):
    """Critical points per test for one (p, n) cell; `tag` keys the seeds."""
    crit = {}
    for (kernel, m), tests in _mc_groups(spec).items():
        seed = stream_id("bootstrap", spec.seed, p, n, str(kernel), m, *tag)
        cfg = _cell_cfg(spec, kernel, m, seed)
        stats, _ = bootstrap_replicates(n, p, cfg, n_jobs=n_jobs)
        for t in tests:
            crit[t.name] = empirical_quantile(aggregate(stats, t.agg), 1.0 - spec.alpha)
    for t in spec.tests:
        if t.kind == "bhep":
            seed = stream_id("bhep", spec.seed, p, n, t.beta, *tag)
            null = bhep_null_statistics(n, p, t.beta, spec.M, seed)
            crit[t.name] = empirical_quantile(null, 1.0 - spec.alpha)
    return crit


def _run_trials(args):
    """Decisions for a block of trials at one grid point.

    Returns an int array of shape (trials, tests): 1 reject, 0 accept,
    -1 numerical failure.
    """
    spec, p, n, value, lo, hi, crit = args
    gen = spec.point(value)
    groups = _mc_groups(spec)
    out = np.zeros((hi - lo, len(spec.tests)), dtype=np.int8)
    index = {t.name: k for k, t in enumerate(spec.tests)}
    for i in range(lo, hi):
        row = out[i - lo]
        key = (p, n, _fmt(value), i)
        try:
            x = sample_alternative(n, p, gen, RngStream(spec.seed, stream_id("data", *key)))
            trial_crit = crit if crit is not None else _null_distributions(spec, p, n, key, 1)
            for (kernel, m), tests in groups.items():
                cfg = _cell_cfg(spec, kernel, m, spec.seed)
                reps = statistic_replicates(x, cfg, RngStream(spec.seed, stream_id("statistic", *key)))
                for t in tests:
                    row[index[t.name]] = aggregate(reps, t.agg) > trial_crit[t.name]
            for t in spec.tests:
                if t.kind == "bhep":
                    row[index[t.name]] = bhep_composite(x, t.beta) > trial_crit[t.name]
        except NumericalError as exc:
            log.warning("trial %s failed: %s", key, exc)
            row[:] = -1
    return out


def run_experiment(spec, workers=1, progress=None):
    """Run every grid point of `spec` and return a :class:`PowerTable`.

    Parameters
    ----------
    workers : int
        Worker processes for trials (and shared bootstraps). Output is
        identical for any value.
    progress : callable, optional
        Called with a short status string after each grid point.
    """
    workers = max(1, int(workers))
    rows = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for p in spec.dims:
            for n in spec.sizes:
                if n < p + 1:
                    raise ConfigError(f"sample size n={n} is too small for p={p}")
                crit = _null_distributions(spec, p, n, (), workers) if spec.share_bootstrap else None
                for value in spec.grid:
                    blocks = [(spec, p, n, value, lo, hi, crit) for lo, hi in _blocks(spec.trials, workers)]
                    parts = list(pool.map(_run_trials, blocks)) if pool else [_run_trials(b) for b in blocks]
                    decisions = np.concatenate(parts)
                    failed = decisions[:, 0] < 0
                    n_failed = int(failed.sum())
                    if n_failed > MAX_FAILURE_FRACTION * spec.trials:
                        raise NumericalError(
                            f"{n_failed} of {spec.trials} trials failed at p={p}, n={n}, "
                            f"{spec.param}={value}; aborting"
                        )
                    ok = decisions[~failed]
                    for k, t in enumerate(spec.tests):
                        r = float(ok[:, k].mean()) if len(ok) else float("nan")
                        rows.append(PowerRow(
                            p=p, n=n, param=spec.param or "", value=_grid_float(value), test=t.name,
                            rejection_rate=r, trials=len(ok),
                            mc_stderr=math.sqrt(r * (1.0 - r) / len(ok)) if len(ok) else float("nan"),
                            failures=n_failed,
                        ))
                    if progress is not None:
                        progress(f"{spec.name}: p={p} n={n} {spec.param}={_fmt(value)} done")
    finally:
        if pool is not None:
            pool.shutdown()
    return PowerTable(rows, name=spec.name)


def _grid_float(value):
    return None if value is None else float(value)


def _blocks(total, workers):
    k = max(1, min(total, 4 * workers))
    edges = np.linspace(0, total, k + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def with_overrides(spec, **kw):
    """Copy of `spec` with the given fields replaced (``None`` values ignored)."""
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(spec, **kw) if kw else spec
