//! Penalized regression with the convex log-exp-sum (LES) group penalty.
//!
//! The crate provides:
//!
//! - [`model`]: grouped designs, standardization, the penalty and objective;
//! - [`solver`]: group-level coordinate descent with a Barzilai-Borwein
//!   gradient-projection inner solver, a LASSO baseline, and KKT checkers;
//! - [`tuning`]: validation-set, k-fold CV and BIC selection of `(lambda,
//!   alpha)`, with randomized-trace degrees of freedom;
//! - [`simulation`]: the four benchmark scenarios, SNR control,
//!   sensitivity/specificity/model-error metrics and replicate studies;
//! - [`verification`]: independent oracles (brute-force minimization,
//!   small-alpha LASSO limit, orthonormal-design identities, gradient and
//!   correlation-bound checks).

pub mod error;
pub mod linalg;
pub mod model;
pub mod simulation;
pub mod solver;
pub mod tuning;
pub mod verification;

pub(crate) mod seeding;

pub use error::{Error, Result};
pub use model::{
    active_sets, lambda_max, les_penalty, objective, predict, standardize, CoefficientVector,
    FitResult, GroupPartition, GroupedDesign, PenaltyConfig, Response, SELECTION_ZERO_TOL,
};
pub use solver::{
    bb_gradient_projection, fit_lasso, fit_les, kkt_residual, kkt_residual_lasso, lasso_gamma_max,
    soft_threshold, solve_group_subproblem, SolverOptions, SplitObjective, SplitState,
    SubproblemData,
};
pub use simulation::{
    build_scenario, run_replicates, sample_dataset, selection_metrics, sigma_for_snr, Method,
    ReplicateSummary, SelectionMetrics, SimulationScenario, StudyOptions, SummaryStat,
    TuningMethod,
};
pub use tuning::{
    bic_score, default_alphas, grid_search, kfold_cv, randomized_trace_df, Criterion, DfConfig,
    LambdaGrid, TuningEntry, TuningGrid, TuningResult, ValidationData,
};
pub use verification::{
    brute_force_fit, check_gradient, check_orthonormal_identities, check_prop1_limit,
    check_prop2_bound, orthonormal_design, OracleReport,
};
