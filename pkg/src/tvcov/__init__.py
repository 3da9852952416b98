"""Time-varying large covariance matrix estimation.

Kernel-weighted local principal components and characteristic-projected local
principal components with adaptive soft-thresholding of residual covariances,
plus a seeded simulation lab and a rolling minimum-variance backtester.
"""

from .backtest import (
    BacktestConfig,
    BacktestResult,
    RebalanceWindow,
    build_schedule,
    compare_estimators,
    gmv_weights,
    observed_factor_covariance,
    run_backtest,
)
from .engine import (
    CovarianceEstimate,
    EstimatorConfig,
    PathResult,
    RateDiagnostics,
    TunedEstimate,
    assemble,
    estimate_at,
    estimate_path,
    rate_diagnostics,
    tune_oracle,
)
from .errors import (
    AlignmentError,
    ConditioningError,
    ConfigError,
    DataError,
    DefinitenessError,
    DegenerateBasisError,
    ExtrapolationError,
    FitError,
    NumericError,
    PanelFormatError,
    ParameterError,
    SingularityError,
    TvcovError,
)
from .kernels import (
    KernelWeights,
    boundary_weights,
    epanechnikov,
    interior_region,
    uniform_weights,
)
from .linalg import (
    EigenPairs,
    cubic_spline_interpolate,
    nearest_spd,
    procrustes_align,
    soft_threshold,
    spd_inverse,
    sym_eigen_topk,
    woodbury_inverse,
)
from .localpca import (
    LocalFactorEstimate,
    estimate_local_pca,
    factor_covariance,
    weight_panel,
)
from .panel import (
    CharacteristicsPanel,
    PanelData,
    load_characteristics,
    load_panel,
    save_characteristics,
    save_panel,
)
from .sieve import (
    SieveBasis,
    basis_coefficients,
    build_basis,
    estimate_local_ppca,
    project,
    weighted_ls_objective,
)
from .simulation import (
    MonteCarloResult,
    SimulatedDataset,
    SimulationConfig,
    SimulationTruth,
    draw_panel,
    fit_loading_surface,
    gen_characteristics,
    gen_error_covs,
    gen_factor_covs,
    gen_loading_curves,
    generate_dataset,
    interpolate_all,
    run_monte_carlo,
)
from .thresholding import (
    ResidualCovariance,
    ThresholdConfig,
    apply_threshold,
    residual_moments,
    sparsity_measure,
    threshold_rate,
    threshold_rate_with_sieve,
)

__version__ = "0.1.0"
