"""Bayesian variable selection for short longitudinal panels.

Differenced lagged designs turn short panels into intercept-free linear
models; features are then screened one at a time by conjugate Bayes
factors or selected jointly by a group spike-and-slab sampler.
"""

from .bglss import (
    ChainSummary,
    GibbsConfig,
    GibbsDraws,
    USING_NUMBA,
    load_beta_draws,
    mcem_lambda_update,
    posterior_median_select,
    run_gibbs,
    save_beta_draws,
)
from .bayesfactor import (
    DECISIVE_BF,
    TWO_LOG_DECISIVE,
    BayesFactorReport,
    Evidence,
    ScreenResult,
    classify_bf,
    gbf_screen,
    is_decisive,
    maruyama_george_gbf,
    null_based_bf,
    screen_to_csv,
    screen_to_json,
    univariate_screen,
)
from .deltadesign import (
    DifferencedDesign,
    build_multivariate_design,
    build_univariate_design,
    difference_response,
    gls_equivalence_check,
)
from .errors import (
    BlogError,
    DegenerateBeta,
    DegenerateDf,
    DimensionMismatch,
    DuplicateKey,
    EmptyChain,
    InvalidR2,
    MissingCell,
    NonConvergentSigma,
    NonPositiveG,
    NumericalError,
    RaggedPanel,
    RankDeficientDesign,
    SingularCovariance,
    SingularDesign,
    TooFewTimePoints,
    UnderdeterminedSystem,
    ValidationError,
    ZeroDesign,
)
from .evalharness import (
    DEFAULT_THRESHOLDS,
    SelectionOutcome,
    StudyResult,
    bf_threshold_sweep,
    run_multivariate_study,
    run_univariate_study,
    selection_rates,
    study_to_json,
)
from .gprior import (
    CONDITION_LIMIT,
    G_RULE_FIXED,
    G_RULE_SQRT_N,
    G_RULE_SURE,
    GPriorSpec,
    NIGPosterior,
    OlsFit,
    gprior_posterior,
    nig_logpdf,
    nig_posterior,
    ols_fit,
    resolve_g,
    sure_g,
    sure_value,
)
from .longdata import (
    ColumnConfig,
    LongitudinalDataset,
    ValidationReport,
    load_long_csv,
    validate,
    write_long_csv,
)
from .simgen import PRESETS, SimScenario, SimTruth, export, preset, simulate

__version__ = "0.1.0"
