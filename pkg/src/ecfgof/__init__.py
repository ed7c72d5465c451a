"""Monte Carlo characteristic-function goodness-of-fit tests for elliptical families."""

from .engine import (
    TestConfig,
    TestOutcome,
    aggregate_statistic,
    bhep_test,
    bootstrap_critical,
    run_test,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DataFormatError,
    EstimationError,
    NearSingularError,
    NumericalError,
)
from .estimators import ThetaHat, moment_estimate, standardize
from .numerics import SymPosDef, WeightKernel, inv_sqrt, psi_eval, sqrtm, sym_eigen
from .samplers import (
    AltSpec,
    FamilySpec,
    RngStream,
    sample_alternative,
    sample_family,
    sample_kotz,
    sample_mvlaplace,
    sample_mvnormal,
    sample_mvt,
    sample_sphere,
)
from .statistics import (
    bhep_composite,
    t2_integral_oracle,
    t_gauss_simple,
    t_psi_composite,
    t_psi_simple,
)

__version__ = "0.1.0"
