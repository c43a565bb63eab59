//! Simulation benchmark: the four standard scenarios, signal-to-noise
//! control, selection/error metrics and replicate studies.
//!
//! Data are generated from `y = x'beta* + eps` with `x ~ N(0, Sigma)`,
//! `eps ~ N(0, sigma²)` and `sigma` chosen so that the signal-to-noise ratio
//! `sqrt(beta*' Sigma beta*) / sigma` hits a target (3 by default).

use rand::prelude::*;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Mat};
use crate::model::{standardize, GroupPartition, GroupedDesign, Response, SELECTION_ZERO_TOL};
use crate::seeding;
use crate::solver::{fit_lasso, lasso_gamma_max, SolverOptions};
use crate::tuning::{
    bic_score, grid_search, Criterion, DfConfig, TuningGrid, TuningResult, ValidationData,
};

/// Fitted-model family used in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Les,
    Lasso,
}

/// Tuning strategy used in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuningMethod {
    /// Independent tuning set of the same size, regenerated per replicate.
    TuningSet,
    /// BIC; degrees of freedom by randomized trace for LES, by the nonzero
    /// count for LASSO.
    Bic,
}

/// A data-generating design: group sizes, true coefficients, covariate
/// covariance and noise level.
#[derive(Debug, Clone)]
pub struct SimulationScenario {
    pub label: String,
    pub n: usize,
    pub partition: GroupPartition,
    pub beta_star: Vec<f64>,
    pub sigma_cov: Mat,
    pub snr: f64,
    pub sigma_noise: f64,
    pub seed: u64,
}

impl SimulationScenario {
    /// Builds a scenario, deriving the noise level from the target SNR and
    /// validating that the covariance admits a Cholesky factor.
    pub fn new(
        label: impl Into<String>,
        n: usize,
        partition: GroupPartition,
        beta_star: Vec<f64>,
        sigma_cov: Mat,
        snr: f64,
        seed: u64,
    ) -> Result<Self> {
        if beta_star.len() != partition.num_variables() {
            return Err(Error::DimensionMismatch(
                "beta_star length does not match the partition".into(),
            ));
        }
        if sigma_cov.nrows() != beta_star.len() || sigma_cov.ncols() != beta_star.len() {
            return Err(Error::DimensionMismatch(
                "covariance dimensions do not match beta_star".into(),
            ));
        }
        cholesky(&sigma_cov)?;
        let sigma_noise = sigma_for_snr(&beta_star, &sigma_cov, snr)?;
        Ok(SimulationScenario {
            label: label.into(),
            n,
            partition,
            beta_star,
            sigma_cov,
            snr,
            sigma_noise,
            seed,
        })
    }

    /// Same design at a different sample size.
    pub fn with_n(&self, n: usize) -> SimulationScenario {
        SimulationScenario {
            n,
            ..self.clone()
        }
    }
}

/// Noise level for a target signal-to-noise ratio, with SNR the variance
/// ratio `beta*' Sigma beta* / sigma²`, so `sigma = sqrt(beta*' Sigma beta* /
/// snr)`. This is the convention that reproduces the benchmark model-error
/// scale. An infinite SNR gives the noiseless limit `sigma = 0`.
pub fn sigma_for_snr(beta_star: &[f64], sigma_cov: &Mat, snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::InvalidConfig(format!("snr must be > 0, got {snr}")));
    }
    let sb = sigma_cov.matvec(beta_star);
    let signal = crate::linalg::dot(beta_star, &sb);
    if signal <= 0.0 {
        return Err(Error::Degenerate(
            "beta_star is zero; signal-to-noise ratio undefined".into(),
        ));
    }
    if snr.is_infinite() {
        return Ok(0.0);
    }
    Ok((signal / snr).sqrt())
}

/// The 5x5 correlation block with a 3-variable and a 2-variable clique at
/// correlation 0.7, cross-correlated at 0.1.
fn block_p() -> Mat {
    let rows = [
        [1.0, 0.7, 0.7, 0.1, 0.1],
        [0.7, 1.0, 0.7, 0.1, 0.1],
        [0.7, 0.7, 1.0, 0.1, 0.1],
        [0.1, 0.1, 0.1, 1.0, 0.7],
        [0.1, 0.1, 0.1, 0.7, 1.0],
    ];
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Mat::from_rows(5, 5, &flat)
}

/// The 5x5 equicorrelated block at 0.7.
fn block_q() -> Mat {
    let mut m = Mat::zeros(5, 5);
    for i in 0..5 {
        for j in 0..5 {
            m.set(i, j, if i == j { 1.0 } else { 0.7 });
        }
    }
    m
}

fn block_diag(blocks: &[&Mat]) -> Mat {
    let p: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(p, p);
    let mut at = 0;
    for b in blocks {
        for i in 0..b.nrows() {
            for j in 0..b.ncols() {
                out.set(at + i, at + j, b.get(i, j));
            }
        }
        at += b.nrows();
    }
    out
}

/// Covariance shared by scenarios 2 and 3: `blockdiag(P, P, Q, Q, Q)`.
fn sigma_ex2() -> Mat {
    let p = block_p();
    let q = block_q();
    block_diag(&[&p, &p, &q, &q, &q])
}

/// The four benchmark designs (n = 100, SNR = 3 throughout):
///
/// 1. "all-in-all-out": 5 groups of 5, identity covariance,
///    `beta* = (2,2,2,-2,-2, 0...)`;
/// 2. "not-all-in-all-out": covariance `blockdiag(P,P,Q,Q,Q)`,
///    `beta* = (2,2,2,0,0, 2,2,2,0,0, 0...)`;
/// 3. mixture: same covariance, `beta* = (0,0,0,2,2, 0,0,0,2,2, 1x5, 1x5, 0x5)`;
/// 4. mixture at p = 50: group sizes (10,10,5,10,10,5), covariance
///    `blockdiag(Sigma, Sigma)` with scenario 2's `Sigma`.
pub fn build_scenario(example_id: usize) -> Result<SimulationScenario> {
    match example_id {
        1 => {
            let mut beta = vec![0.0; 25];
            beta[..5].copy_from_slice(&[2.0, 2.0, 2.0, -2.0, -2.0]);
            SimulationScenario::new(
                "example-1",
                100,
                GroupPartition::contiguous(&[5, 5, 5, 5, 5])?,
                beta,
                Mat::identity(25),
                3.0,
                0,
            )
        }
        2 => {
            let mut beta = vec![0.0; 25];
            beta[..3].copy_from_slice(&[2.0, 2.0, 2.0]);
            beta[5..8].copy_from_slice(&[2.0, 2.0, 2.0]);
            SimulationScenario::new(
                "example-2",
                100,
                GroupPartition::contiguous(&[5, 5, 5, 5, 5])?,
                beta,
                sigma_ex2(),
                3.0,
                0,
            )
        }
        3 => {
            let mut beta = vec![0.0; 25];
            beta[3..5].copy_from_slice(&[2.0, 2.0]);
            beta[8..10].copy_from_slice(&[2.0, 2.0]);
            for b in beta.iter_mut().take(20).skip(10) {
                *b = 1.0;
            }
            SimulationScenario::new(
                "example-3",
                100,
                GroupPartition::contiguous(&[5, 5, 5, 5, 5])?,
                beta,
                sigma_ex2(),
                3.0,
                0,
            )
        }
        4 => {
            let mut beta = vec![0.0; 50];
            // group 1 (10 vars): 0,0,0,2,2,0,0,0,2,2
            beta[3] = 2.0;
            beta[4] = 2.0;
            beta[8] = 2.0;
            beta[9] = 2.0;
            // group 2 (10 vars): 1,1,1,1,1,0,0,0,0,0
            for b in beta.iter_mut().take(15).skip(10) {
                *b = 1.0;
            }
            // group 3 (5 vars): all ones
            for b in beta.iter_mut().take(25).skip(20) {
                *b = 1.0;
            }
            let sigma = sigma_ex2();
            SimulationScenario::new(
                "example-4",
                100,
                GroupPartition::contiguous(&[10, 10, 5, 10, 10, 5])?,
                beta,
                block_diag(&[&sigma, &sigma]),
                3.0,
                0,
            )
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown scenario id {other}; expected 1..=4"
        ))),
    }
}

/// Draws one `(X_raw, y_raw)` data set: rows `x_i = L z_i` with `L` the
/// Cholesky factor of the covariance, `y = X beta* + sigma eps`.
/// Deterministic given the seed.
pub fn sample_dataset(scenario: &SimulationScenario, seed: u64) -> Result<(Mat, Vec<f64>)> {
    let p = scenario.beta_star.len();
    let n = scenario.n;
    let l = cholesky(&scenario.sigma_cov)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut x = Mat::zeros(n, p);
    let mut z = vec![0.0; p];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample::<f64, _>(StandardNormal);
        }
        // x_i = L z, L lower triangular
        for j in 0..p {
            let mut v = 0.0;
            for k in 0..=j {
                v += l.get(j, k) * z[k];
            }
            x.set(i, j, v);
        }
    }
    let mut y = x.matvec(&scenario.beta_star);
    if scenario.sigma_noise > 0.0 {
        for yi in y.iter_mut() {
            *yi += scenario.sigma_noise * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok((x, y))
}

/// Variable-selection and estimation quality of one fit.
#[derive(Debug, Clone)]
pub struct SelectionMetrics {
    /// Selected important variables / important variables.
    pub sens: f64,
    /// Removed unimportant variables / unimportant variables.
    pub spec: f64,
    /// `(beta_hat - beta*)' Sigma (beta_hat - beta*)` with the population
    /// covariance.
    pub model_error: f64,
    pub test_mse: Option<f64>,
}

/// Computes sensitivity, specificity and model error. `beta_hat` must be on
/// the original covariate scale (rescale standardized estimates by the
/// column scales first).
pub fn selection_metrics(
    beta_hat: &[f64],
    scenario: &SimulationScenario,
    zero_tol: f64,
) -> Result<SelectionMetrics> {
    let p = scenario.beta_star.len();
    if beta_hat.len() != p {
        return Err(Error::DimensionMismatch(
            "selection_metrics: beta_hat length mismatch".into(),
        ));
    }
    let important: Vec<bool> = scenario.beta_star.iter().map(|b| *b != 0.0).collect();
    let n_important = important.iter().filter(|b| **b).count();
    let n_unimportant = p - n_important;
    if n_important == 0 {
        return Err(Error::Degenerate(
            "no important variables in beta_star; sensitivity undefined".into(),
        ));
    }
    let mut tp = 0usize;
    let mut tn = 0usize;
    for j in 0..p {
        let selected = beta_hat[j].abs() > zero_tol;
        if important[j] && selected {
            tp += 1;
        }
        if !important[j] && !selected {
            tn += 1;
        }
    }
    let diff: Vec<f64> = beta_hat
        .iter()
        .zip(&scenario.beta_star)
        .map(|(a, b)| a - b)
        .collect();
    let sd = scenario.sigma_cov.matvec(&diff);
    let me = crate::linalg::dot(&diff, &sd);
    Ok(SelectionMetrics {
        sens: tp as f64 / n_important as f64,
        spec: if n_unimportant == 0 {
            1.0
        } else {
            tn as f64 / n_unimportant as f64
        },
        model_error: me,
        test_mse: None,
    })
}

/// Mean and standard error (`sd / sqrt(n)`) of a sample.
#[derive(Debug, Clone, Copy)]
pub struct SummaryStat {
    pub mean: f64,
    pub se: f64,
}

fn summarize(values: &[f64]) -> SummaryStat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return SummaryStat { mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    SummaryStat {
        mean,
        se: (var / n).sqrt(),
    }
}

/// Replicate-study summary in the style of the benchmark tables, with
/// standard errors reported separately.
#[derive(Debug, Clone)]
pub struct ReplicateSummary {
    pub scenario: String,
    pub method: Method,
    pub tuning: TuningMethod,
    pub n_reps: usize,
    pub n_failed: usize,
    pub sens: SummaryStat,
    pub spec: SummaryStat,
    pub model_error: SummaryStat,
    /// `||beta_hat - beta*||_2` on the original scale.
    pub l2_error: SummaryStat,
    /// Fraction of replicates whose selected group set equals the true one.
    pub group_recovery_rate: f64,
    /// Largest KKT residual over every fit evaluated in the study.
    pub max_kkt_residual: f64,
}

/// Per-replicate study settings.
#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub solver: SolverOptions,
    /// Grid used for the LES method.
    pub les_alphas: Vec<f64>,
    pub lambda_count: usize,
    pub lambda_min_ratio: f64,
    /// Perturbation count for the BIC df estimate (LES only).
    pub df_r: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            solver: SolverOptions::default(),
            les_alphas: crate::tuning::default_alphas(),
            lambda_count: 50,
            lambda_min_ratio: 1e-3,
            df_r: 5,
        }
    }
}

struct ReplicateOutcome {
    metrics: SelectionMetrics,
    l2: f64,
    group_recovered: bool,
    max_kkt: f64,
    converged: bool,
}

/// Runs `n_reps` independent replicates of a scenario/method/tuning
/// combination and summarizes sensitivity, specificity and model error.
/// Replicate `r` derives its streams from `base_seed + r`, so results do not
/// depend on scheduling. Non-converged replicates are excluded and counted;
/// more than 5% of them is an error.
pub fn run_replicates(
    scenario: &SimulationScenario,
    n_reps: usize,
    method: Method,
    tuning: TuningMethod,
    base_seed: u64,
    study: &StudyOptions,
) -> Result<ReplicateSummary> {
    if n_reps < 2 {
        return Err(Error::InvalidConfig("need at least 2 replicates".into()));
    }

    let outcomes: Vec<Result<ReplicateOutcome>> = (0..n_reps)
        .into_par_iter()
        .map(|r| run_one_replicate(scenario, method, tuning, base_seed + r as u64, study))
        .collect();

    let mut ok = Vec::with_capacity(n_reps);
    let mut n_failed = 0usize;
    for out in outcomes {
        match out {
            Ok(o) if o.converged => ok.push(o),
            Ok(_) => n_failed += 1,
            Err(_) => n_failed += 1,
        }
    }
    if n_failed * 20 > n_reps {
        return Err(Error::Solver(format!(
            "{n_failed} of {n_reps} replicates failed to converge"
        )));
    }

    let sens: Vec<f64> = ok.iter().map(|o| o.metrics.sens).collect();
    let spec: Vec<f64> = ok.iter().map(|o| o.metrics.spec).collect();
    let me: Vec<f64> = ok.iter().map(|o| o.metrics.model_error).collect();
    let l2: Vec<f64> = ok.iter().map(|o| o.l2).collect();
    let recovered = ok.iter().filter(|o| o.group_recovered).count();
    let max_kkt = ok.iter().map(|o| o.max_kkt).fold(0.0, f64::max);

    Ok(ReplicateSummary {
        scenario: scenario.label.clone(),
        method,
        tuning,
        n_reps,
        n_failed,
        sens: summarize(&sens),
        spec: summarize(&spec),
        model_error: summarize(&me),
        l2_error: summarize(&l2),
        group_recovery_rate: recovered as f64 / ok.len() as f64,
        max_kkt_residual: max_kkt,
    })
}

fn run_one_replicate(
    scenario: &SimulationScenario,
    method: Method,
    tuning: TuningMethod,
    rep_seed: u64,
    study: &StudyOptions,
) -> Result<ReplicateOutcome> {
    let (x_train, y_train) = sample_dataset(scenario, seeding::derive(rep_seed, 0))?;
    let (design, response) = standardize(&x_train, &y_train, scenario.partition.clone())?;

    let tuning_data = match tuning {
        TuningMethod::TuningSet => Some(sample_dataset(scenario, seeding::derive(rep_seed, 1))?),
        TuningMethod::Bic => None,
    };

    let (beta_std, max_kkt, converged) = match method {
        Method::Les => {
            let grid = TuningGrid::new(
                crate::tuning::LambdaGrid::Auto {
                    count: study.lambda_count,
                    min_ratio: study.lambda_min_ratio,
                },
                study.les_alphas.clone(),
                match tuning {
                    TuningMethod::TuningSet => Criterion::Validation,
                    TuningMethod::Bic => Criterion::Bic,
                },
            )?;
            let weights: Vec<f64> = {
                let p = scenario.partition.num_variables() as f64;
                scenario
                    .partition
                    .sizes()
                    .iter()
                    .map(|&pk| pk as f64 / p)
                    .collect()
            };
            let dfcfg = DfConfig {
                r: study.df_r,
                rho: None,
                seed: seeding::derive(rep_seed, 2),
            };
            let result: TuningResult = match &tuning_data {
                Some((xv, yv)) => grid_search(
                    &design,
                    &response,
                    &grid,
                    Some(ValidationData {
                        x_raw: xv,
                        y_raw: yv,
                    }),
                    None,
                    &weights,
                    &study.solver,
                )?,
                None => grid_search(
                    &design,
                    &response,
                    &grid,
                    None,
                    Some(&dfcfg),
                    &weights,
                    &study.solver,
                )?,
            };
            let max_kkt = result.max_kkt_residual();
            let converged = result.selected_fit.converged;
            (result.selected_fit.beta, max_kkt, converged)
        }
        Method::Lasso => select_lasso(
            &design,
            &response,
            tuning_data.as_ref().map(|(x, y)| (x, y.as_slice())),
            study,
        )?,
    };

    let scales = design.column_scales();
    let beta_original: Vec<f64> = beta_std
        .as_slice()
        .iter()
        .zip(scales)
        .map(|(b, s)| b / s)
        .collect();
    let metrics = selection_metrics(&beta_original, scenario, SELECTION_ZERO_TOL)?;
    let l2 = beta_original
        .iter()
        .zip(&scenario.beta_star)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();

    let true_groups: Vec<bool> = scenario
        .partition
        .groups()
        .iter()
        .map(|g| g.iter().any(|&j| scenario.beta_star[j] != 0.0))
        .collect();
    let got_groups: Vec<bool> = scenario
        .partition
        .groups()
        .iter()
        .map(|g| g.iter().any(|&j| beta_original[j].abs() > SELECTION_ZERO_TOL))
        .collect();
    let group_recovered = true_groups == got_groups;

    Ok(ReplicateOutcome {
        metrics,
        l2,
        group_recovered,
        max_kkt,
        converged,
    })
}

/// LASSO baseline selection: a 50-point descending gamma path with warm
/// starts, tuned either by tuning-set MSE or by BIC with df = nonzero count
/// (the standard LASSO df estimate).
fn select_lasso(
    design: &GroupedDesign,
    response: &Response,
    tuning_data: Option<(&Mat, &[f64])>,
    study: &StudyOptions,
) -> Result<(crate::model::CoefficientVector, f64, bool)> {
    let gmax = lasso_gamma_max(design, response).max(1e-12);
    let count = study.lambda_count;
    let log_max = gmax.ln();
    let log_min = (gmax * study.lambda_min_ratio).ln();
    let gammas: Vec<f64> = (0..count)
        .map(|i| {
            let t = if count == 1 {
                0.0
            } else {
                i as f64 / (count as f64 - 1.0)
            };
            (log_max + t * (log_min - log_max)).exp()
        })
        .collect();

    let mut best: Option<(f64, f64, crate::model::CoefficientVector, bool)> = None;
    let mut max_kkt = 0.0f64;
    for &gamma in &gammas {
        let fit = fit_lasso(design, response, gamma, &study.solver)?;
        max_kkt = max_kkt.max(fit.kkt_residual);
        let value = match tuning_data {
            Some((xv, yv)) => {
                let pred = crate::model::predict(design, response, &fit.beta, xv)?;
                pred.iter()
                    .zip(yv)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / yv.len() as f64
            }
            None => {
                let y_hat = design.matrix().matvec(fit.beta.as_slice());
                let df = fit.active_variables.len() as f64;
                bic_score(response, &y_hat, df, design.n())?
            }
        };
        let replace = match &best {
            None => true,
            Some((bv, bg, _, _)) => value < bv - 1e-12 || ((value - bv).abs() <= 1e-12 && gamma > *bg),
        };
        if replace {
            best = Some((value, gamma, fit.beta.clone(), fit.converged));
        }
    }
    let (_, _, beta, converged) = best.expect("gamma path is non-empty");
    Ok((beta, max_kkt, converged))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_1_design() {
        let sc = build_scenario(1).unwrap();
        assert_eq!(sc.n, 100);
        assert_eq!(sc.partition.num_groups(), 5);
        assert_eq!(sc.beta_star.iter().filter(|b| **b != 0.0).count(), 5);
        // identity covariance
        for i in 0..25 {
            for j in 0..25 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(sc.sigma_cov.get(i, j), expect);
            }
        }
        // beta*' Sigma beta* = 4 * 5 = 20, sigma = sqrt(20/3)
        assert!((sc.sigma_noise - (20.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((sc.sigma_noise - 2.5820).abs() < 1e-4);
    }

    #[test]
    fn scenario_2_covariance_entries() {
        let sc = build_scenario(2).unwrap();
        assert_eq!(sc.sigma_cov.get(0, 1), 0.7);
        assert_eq!(sc.sigma_cov.get(0, 3), 0.1);
        assert_eq!(sc.sigma_cov.get(3, 4), 0.7);
        // across covariance blocks
        assert_eq!(sc.sigma_cov.get(0, 5), 0.0);
        // Q blocks equicorrelated
        assert_eq!(sc.sigma_cov.get(10, 14), 0.7);
        assert_eq!(
            &sc.beta_star[..10],
            &[2.0, 2.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0, 0.0, 0.0]
        );
    }

    #[test]
    fn scenario_3_beta_pattern() {
        let sc = build_scenario(3).unwrap();
        assert_eq!(&sc.beta_star[..5], &[0.0, 0.0, 0.0, 2.0, 2.0]);
        assert_eq!(&sc.beta_star[5..10], &[0.0, 0.0, 0.0, 2.0, 2.0]);
        assert!(sc.beta_star[10..20].iter().all(|b| *b == 1.0));
        assert!(sc.beta_star[20..].iter().all(|b| *b == 0.0));
    }

    #[test]
    fn scenario_4_group_sizes() {
        let sc = build_scenario(4).unwrap();
        assert_eq!(sc.partition.sizes(), vec![10, 10, 5, 10, 10, 5]);
        assert_eq!(sc.beta_star.len(), 50);
        assert_eq!(sc.sigma_cov.nrows(), 50);
        // second covariance copy starts at 25
        assert_eq!(sc.sigma_cov.get(25, 26), 0.7);
        assert_eq!(sc.sigma_cov.get(24, 25), 0.0);
    }

    #[test]
    fn unknown_scenario_rejected() {
        assert!(build_scenario(0).is_err());
        assert!(build_scenario(5).is_err());
    }

    #[test]
    fn sigma_for_snr_hand_cases() {
        let sigma = Mat::identity(2);
        assert!((sigma_for_snr(&[1.0, 0.0], &sigma, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // doubling beta doubles sigma
        let a = sigma_for_snr(&[1.0, 2.0], &sigma, 3.0).unwrap();
        let b = sigma_for_snr(&[2.0, 4.0], &sigma, 3.0).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
        assert!(sigma_for_snr(&[0.0, 0.0], &sigma, 3.0).is_err());
        assert_eq!(sigma_for_snr(&[1.0, 0.0], &sigma, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn sample_dataset_is_deterministic() {
        let sc = build_scenario(2).unwrap();
        let (x1, y1) = sample_dataset(&sc, 42).unwrap();
        let (x2, y2) = sample_dataset(&sc, 42).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(y1, y2);
        let (_, y3) = sample_dataset(&sc, 43).unwrap();
        assert_ne!(y1, y3);
    }

    #[test]
    fn noiseless_dataset_is_exact_linear_model() {
        let mut sc = build_scenario(1).unwrap();
        sc.snr = f64::INFINITY;
        sc.sigma_noise = 0.0;
        let (x, y) = sample_dataset(&sc, 5).unwrap();
        let fitted = x.matvec(&sc.beta_star);
        for (a, b) in y.iter().zip(&fitted) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sample_covariance_converges_to_sigma() {
        let mut sc = build_scenario(2).unwrap();
        sc.n = 100_000;
        let (x, _) = sample_dataset(&sc, 7).unwrap();
        let n = x.nrows() as f64;
        // spot-check a handful of entries of XᵀX/n against Sigma
        for &(i, j) in &[(0usize, 1usize), (0, 3), (3, 4), (0, 5), (10, 14), (20, 21)] {
            let got = crate::linalg::dot(x.col(i), x.col(j)) / n;
            let want = sc.sigma_cov.get(i, j);
            assert!(
                (got - want).abs() <= 0.02,
                "cov({i},{j}) = {got}, expected {want}"
            );
        }
    }

    #[test]
    fn metrics_perfect_estimate() {
        let sc = build_scenario(1).unwrap();
        let m = selection_metrics(&sc.beta_star.clone(), &sc, 1e-8).unwrap();
        assert_eq!(m.sens, 1.0);
        assert_eq!(m.spec, 1.0);
        assert!(m.model_error.abs() < 1e-12);
    }

    #[test]
    fn metrics_zero_estimate_on_scenario_1() {
        let sc = build_scenario(1).unwrap();
        let m = selection_metrics(&[0.0; 25], &sc, 1e-8).unwrap();
        assert_eq!(m.sens, 0.0);
        assert_eq!(m.spec, 1.0);
        assert!((m.model_error - 20.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_select_everything_has_zero_spec() {
        let sc = build_scenario(1).unwrap();
        let m = selection_metrics(&[0.5; 25], &sc, 1e-8).unwrap();
        assert_eq!(m.spec, 0.0);
        assert_eq!(m.sens, 1.0);
    }

    #[test]
    fn metrics_reject_all_zero_truth() {
        let mut sc = build_scenario(1).unwrap();
        sc.beta_star = vec![0.0; 25];
        assert!(selection_metrics(&[0.0; 25], &sc, 1e-8).is_err());
    }

    #[test]
    fn bic_selects_sparser_models_than_validation_on_scenario_1() {
        let sc = build_scenario(1).unwrap();
        let mut study = StudyOptions::default();
        study.les_alphas = vec![1.0, 4.0];
        study.lambda_count = 20;
        let bic = run_replicates(&sc, 12, Method::Les, TuningMethod::Bic, 5, &study).unwrap();
        let val = run_replicates(&sc, 12, Method::Les, TuningMethod::TuningSet, 5, &study).unwrap();
        assert!(
            bic.spec.mean >= val.spec.mean,
            "BIC specificity {} below validation {}",
            bic.spec.mean,
            val.spec.mean
        );
    }

    #[test]
    fn replicate_summary_is_deterministic() {
        let sc = build_scenario(1).unwrap();
        let mut study = StudyOptions::default();
        // small grid keeps this test quick
        study.les_alphas = vec![1.0];
        study.lambda_count = 8;
        let a = run_replicates(&sc, 4, Method::Les, TuningMethod::TuningSet, 3, &study).unwrap();
        let b = run_replicates(&sc, 4, Method::Les, TuningMethod::TuningSet, 3, &study).unwrap();
        assert_eq!(a.model_error.mean.to_bits(), b.model_error.mean.to_bits());
        assert_eq!(a.sens.mean.to_bits(), b.sens.mean.to_bits());
        assert_eq!(a.n_failed, 0);
    }
}
