"""Kernel regression under a mean-parity fairness constraint.

The central objects: a fair basis spanning the directions along which group
prediction means can differ, the projector onto its orthogonal complement,
and solvers that fit ridge / least-squares models inside (or biased toward)
that fair subspace. See the README for the CLI.
"""

__version__ = "0.1.0"

from .data import CsvSchema, DataSet, SyntheticConfig, center_targets, gen_synthetic, load_csv, split, subsample
from .errors import (
    DimensionError,
    DivergenceError,
    MissingGroupError,
    NumericError,
    SchemaError,
    SplitError,
)
from .kernels import (
    ComposedXS,
    DeltaGroup,
    KernelSpec,
    Linear,
    Polynomial,
    Rbf,
    SampleRow,
    Samples,
    cross_gram,
    default_sensitive_kernel,
    eval_kernel,
    gram,
)
from .linalg import EigenResult, center_gram, centering_matrix, numerical_rank, pinv, sym_eig
from .metrics import MetricReport, cov_norm, dpd, evaluate, group_means, mpd, mse, smd, w1_empirical
from .solvers import (
    AdaptiveMoment,
    FittedModel,
    FixedStepGradient,
    GradientFit,
    MseBoundTerms,
    OptimizerConfig,
    SmoothL1Loss,
    SquaredLoss,
    constant_baseline,
    fit_fair,
    fit_fpr,
    fit_gradient,
    fit_tradeoff,
    fit_unconstrained,
    mse_bound_terms,
    predict,
)
from .subspace import (
    Assumption1Report,
    FairBasis,
    build_fair_basis,
    check_assumption1,
    fair_group_mean_residual,
    projection_matrix,
)
