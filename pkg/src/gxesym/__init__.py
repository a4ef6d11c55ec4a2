"""Case-control G x E estimation under gene-environment independence.

Profile-likelihood estimators that profile out either covariate block, their
composite and GLS-symmetric combinations, a scenario simulator with a Monte
Carlo harness, and pre-analysis independence diagnostics.
"""

from .core import CaseControlData, OmegaVector, PrevalenceSpec, RiskSpec, Term, build_design, evaluate_m
from .diagnostics import PrsWeights, independence_screen, polygenic_score
from .errors import (
    CovarianceError,
    DataError,
    DegenerateScoreError,
    DimensionError,
    ExcessiveBootstrapFailure,
    GxeError,
    InsufficientData,
    NonConvergence,
    NumericError,
    PrevalenceError,
    ReplicationFailure,
    ScenarioError,
    SeparationError,
)
from .estimators import (
    FitResult,
    Method,
    balanced_bootstrap,
    fit_composite,
    fit_logistic,
    fit_methods,
    fit_spmle,
    fit_symmetric,
    gls_combine,
)
from .retrolik import ProfileAxis, make_context, profile_loglik, r_hat, s_factor, score
from .simgen import Scenario, gen_case_control, get_scenario, run_replication

__version__ = "0.1.0"
