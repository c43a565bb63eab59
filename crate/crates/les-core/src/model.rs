//! Data model: grouped designs, standardization, the log-exp-sum penalty and
//! the penalized least-squares objective.
//!
//! The fitted problem is
//!
//! ```text
//! min_beta  (1/2n) ||y - X beta||²  +  lambda * sum_k w_k log( sum_j exp(alpha |beta_kj|) )
//! ```
//!
//! over a design whose columns are partitioned into K disjoint groups.
//! Columns are standardized to mean zero with the 1/n variance convention, so
//! `diag(XᵀX/n) = 1`; the response is centered.

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};

/// Estimates with `|beta_j|` above this threshold count as selected
/// variables. Inner-solver projections produce exact zeros, but floating
/// accumulation can leave dust below this level.
pub const SELECTION_ZERO_TOL: f64 = 1e-8;

/// A disjoint partition of column indices `{0..p}` into K ordered groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    p: usize,
}

impl GroupPartition {
    /// Validates that the groups are non-empty, pairwise disjoint and cover
    /// `{0..p}` exactly.
    pub fn new(groups: Vec<Vec<usize>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidGroups("no groups given".into()));
        }
        let p: usize = groups.iter().map(|g| g.len()).sum();
        let mut seen = vec![false; p];
        for (k, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidGroups(format!("group {k} is empty")));
            }
            for &j in g {
                if j >= p {
                    return Err(Error::InvalidGroups(format!(
                        "group {k} references column {j}, but the union of groups has only {p} columns"
                    )));
                }
                if seen[j] {
                    return Err(Error::InvalidGroups(format!(
                        "column {j} appears in more than one group"
                    )));
                }
                seen[j] = true;
            }
        }
        Ok(GroupPartition { groups, p })
    }

    /// Contiguous groups of the given sizes, in order.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut groups = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &s in sizes {
            groups.push((start..start + s).collect());
            start += s;
        }
        GroupPartition::new(groups)
    }

    /// One singleton group per variable.
    pub fn singletons(p: usize) -> Self {
        GroupPartition {
            groups: (0..p).map(|j| vec![j]).collect(),
            p,
        }
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_variables(&self) -> usize {
        self.p
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    /// Group index of column `j`.
    pub fn group_of(&self, j: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.contains(&j))
            .expect("column not covered by partition")
    }
}

/// Standardized design matrix with its group partition and the
/// centering/scaling transform that produced it.
#[derive(Debug, Clone)]
pub struct GroupedDesign {
    x: Mat,
    partition: GroupPartition,
    column_means: Vec<f64>,
    column_scales: Vec<f64>,
}

impl GroupedDesign {
    /// Wraps an already-standardized matrix (mean 0, `Σ x² / n = 1` per
    /// column). Used for synthetic designs built directly in standardized
    /// form, e.g. orthonormal test instances.
    pub fn from_standardized(x: Mat, partition: GroupPartition) -> Result<Self> {
        if x.ncols() != partition.num_variables() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} columns but partition covers {}",
                x.ncols(),
                partition.num_variables()
            )));
        }
        let n = x.nrows() as f64;
        for j in 0..x.ncols() {
            let col = x.col(j);
            let mean = col.iter().sum::<f64>() / n;
            let msq = dot(col, col) / n;
            if mean.abs() > 1e-10 || (msq - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidConfig(format!(
                    "column {j} is not standardized (mean {mean:.2e}, mean square {msq:.6})"
                )));
            }
        }
        let p = x.ncols();
        Ok(GroupedDesign {
            x,
            partition,
            column_means: vec![0.0; p],
            column_scales: vec![1.0; p],
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &Mat {
        &self.x
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    /// Reconstructs the raw (pre-standardization) matrix.
    pub fn raw_matrix(&self) -> Mat {
        let mut raw = self.x.clone();
        for j in 0..raw.ncols() {
            let m = self.column_means[j];
            let s = self.column_scales[j];
            for v in raw.col_mut(j) {
                *v = *v * s + m;
            }
        }
        raw
    }
}

/// Centered response vector.
#[derive(Debug, Clone)]
pub struct Response {
    y: Vec<f64>,
    original_mean: f64,
}

impl Response {
    /// Centers a raw response vector.
    pub fn centered(y_raw: &[f64]) -> Response {
        let mean = y_raw.iter().sum::<f64>() / y_raw.len() as f64;
        Response {
            y: y_raw.iter().map(|v| v - mean).collect(),
            original_mean: mean,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn original_mean(&self) -> f64 {
        self.original_mean
    }

    /// Standard deviation (1/n convention) of the centered response.
    pub fn sd(&self) -> f64 {
        (dot(&self.y, &self.y) / self.y.len() as f64).sqrt()
    }

    /// Adds a perturbation without re-centering. The perturbed vector is fed
    /// back to a fitter in divided-difference degrees-of-freedom estimation,
    /// where re-centering would shift the evaluation point.
    pub fn perturbed(&self, delta: &[f64]) -> Result<Response> {
        if delta.len() != self.y.len() {
            return Err(Error::DimensionMismatch(format!(
                "perturbation has length {}, response has {}",
                delta.len(),
                self.y.len()
            )));
        }
        Ok(Response {
            y: self.y.iter().zip(delta).map(|(a, b)| a + b).collect(),
            original_mean: self.original_mean,
        })
    }
}

/// Tuning parameters of the penalty: `lambda >= 0`, `alpha > 0` and strictly
/// positive per-group weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    pub lambda: f64,
    pub alpha: f64,
    weights: Vec<f64>,
}

impl PenaltyConfig {
    pub fn new(lambda: f64, alpha: f64, weights: Vec<f64>) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be finite and > 0, got {alpha}")));
        }
        if weights.is_empty() || weights.iter().any(|w| !(w > &0.0) || !w.is_finite()) {
            return Err(Error::InvalidConfig(
                "weights must be non-empty and strictly positive".into(),
            ));
        }
        Ok(PenaltyConfig { lambda, alpha, weights })
    }

    /// Default weights `w_k = p_k / p`.
    pub fn with_share_weights(lambda: f64, alpha: f64, partition: &GroupPartition) -> Result<Self> {
        let p = partition.num_variables() as f64;
        let weights = partition.sizes().iter().map(|&pk| pk as f64 / p).collect();
        PenaltyConfig::new(lambda, alpha, weights)
    }

    /// Theory-normalization weights `w_k = p_k`.
    pub fn with_size_weights(lambda: f64, alpha: f64, partition: &GroupPartition) -> Result<Self> {
        let weights = partition.sizes().iter().map(|&pk| pk as f64).collect();
        PenaltyConfig::new(lambda, alpha, weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_groups(&self) -> usize {
        self.weights.len()
    }

    /// Same weights and alpha at a different lambda.
    pub fn at_lambda(&self, lambda: f64) -> PenaltyConfig {
        PenaltyConfig {
            lambda,
            alpha: self.alpha,
            weights: self.weights.clone(),
        }
    }
}

/// Flat coefficient vector; group views are taken through a
/// [`GroupPartition`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    beta: Vec<f64>,
}

impl CoefficientVector {
    pub fn zeros(p: usize) -> Self {
        CoefficientVector { beta: vec![0.0; p] }
    }

    pub fn from_vec(beta: Vec<f64>) -> Self {
        CoefficientVector { beta }
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.beta
    }

    /// Coefficients of group `k` in the partition's within-group order.
    pub fn group_values(&self, partition: &GroupPartition, k: usize) -> Vec<f64> {
        partition.group(k).iter().map(|&j| self.beta[j]).collect()
    }
}

impl std::ops::Index<usize> for CoefficientVector {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.beta[j]
    }
}

/// Outcome of a penalized fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: CoefficientVector,
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub active_groups: Vec<usize>,
    pub active_variables: Vec<usize>,
    /// Objective value recorded after each outer sweep.
    pub sweep_objectives: Vec<f64>,
}

impl FitResult {
    /// Coefficients mapped back to the original covariate scale
    /// (`beta_j / scale_j`).
    pub fn original_scale_beta(&self, design: &GroupedDesign) -> Vec<f64> {
        self.beta
            .as_slice()
            .iter()
            .zip(design.column_scales())
            .map(|(b, s)| b / s)
            .collect()
    }
}

/// Derives active variables/groups from a coefficient vector using
/// [`SELECTION_ZERO_TOL`].
pub fn active_sets(beta: &[f64], partition: &GroupPartition) -> (Vec<usize>, Vec<usize>) {
    let vars: Vec<usize> = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| b.abs() > SELECTION_ZERO_TOL)
        .map(|(j, _)| j)
        .collect();
    let groups: Vec<usize> = (0..partition.num_groups())
        .filter(|&k| partition.group(k).iter().any(|j| vars.contains(j)))
        .collect();
    (groups, vars)
}

/// Centers/scales the raw inputs: every column gets mean zero and
/// `Σ x²/n = 1` (the 1/n variance convention, so `diag(XᵀX/n) = 1`), and the
/// response is centered.
pub fn standardize(
    x_raw: &Mat,
    y_raw: &[f64],
    partition: GroupPartition,
) -> Result<(GroupedDesign, Response)> {
    let n = x_raw.nrows();
    let p = x_raw.ncols();
    if y_raw.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "y has length {}, X has {n} rows",
            y_raw.len()
        )));
    }
    if partition.num_variables() != p {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} variables but X has {p} columns",
            partition.num_variables()
        )));
    }
    if n < 2 {
        return Err(Error::Degenerate("need at least 2 rows to standardize".into()));
    }
    for j in 0..p {
        for (i, v) in x_raw.col(j).iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    if let Some(i) = y_raw.iter().position(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!("response entry {i} is not finite")));
    }

    let nf = n as f64;
    let mut x = x_raw.clone();
    let mut means = vec![0.0; p];
    let mut scales = vec![0.0; p];
    for j in 0..p {
        let mean = x.col(j).iter().sum::<f64>() / nf;
        let var = x.col(j).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
        if var <= 1e-24 {
            return Err(Error::ConstantColumn { index: j });
        }
        let scale = var.sqrt();
        for v in x.col_mut(j) {
            *v = (*v - mean) / scale;
        }
        means[j] = mean;
        scales[j] = scale;
    }

    let y_mean = y_raw.iter().sum::<f64>() / nf;
    let y = y_raw.iter().map(|v| v - y_mean).collect();

    Ok((
        GroupedDesign {
            x,
            partition,
            column_means: means,
            column_scales: scales,
        },
        Response {
            y,
            original_mean: y_mean,
        },
    ))
}

/// Log-exp-sum penalty `Σ_k w_k log( Σ_j exp(alpha |beta_kj|) )`.
///
/// Evaluated with max-subtraction so it stays finite for any finite beta
/// (naive `exp` overflows once `alpha * |beta|` passes ~709).
pub fn les_penalty(
    beta: &CoefficientVector,
    config: &PenaltyConfig,
    partition: &GroupPartition,
) -> f64 {
    debug_assert_eq!(beta.len(), partition.num_variables());
    debug_assert_eq!(config.num_groups(), partition.num_groups());
    let alpha = config.alpha;
    let mut total = 0.0;
    for (k, group) in partition.groups().iter().enumerate() {
        total += config.weights()[k] * group_log_exp_sum(beta.as_slice(), group, alpha);
    }
    total
}

/// `log Σ_j exp(alpha |beta_j|)` over one group, stabilized.
pub(crate) fn group_log_exp_sum(beta: &[f64], group: &[usize], alpha: f64) -> f64 {
    let m = group
        .iter()
        .map(|&j| alpha * beta[j].abs())
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = group.iter().map(|&j| (alpha * beta[j].abs() - m).exp()).sum();
    m + sum.ln()
}

/// Softmax shares `exp(alpha |beta_j|) / Σ_l exp(alpha |beta_l|)` over one
/// group, stabilized. These are the subgradient scale factors in the
/// optimality conditions.
pub(crate) fn group_softmax(beta: &[f64], group: &[usize], alpha: f64) -> Vec<f64> {
    let m = group
        .iter()
        .map(|&j| alpha * beta[j].abs())
        .fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = group.iter().map(|&j| (alpha * beta[j].abs() - m).exp()).collect();
    let sum: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / sum).collect()
}

/// Full objective `(1/2n) ||y - X beta||² + lambda * les_penalty(beta)`.
pub fn objective(
    design: &GroupedDesign,
    y: &Response,
    beta: &CoefficientVector,
    config: &PenaltyConfig,
) -> Result<f64> {
    if beta.len() != design.p() || y.n() != design.n() {
        return Err(Error::DimensionMismatch(
            "objective: beta/response dimensions do not match the design".into(),
        ));
    }
    if config.num_groups() != design.partition().num_groups() {
        return Err(Error::DimensionMismatch(
            "objective: weight vector length does not match the number of groups".into(),
        ));
    }
    let fitted = design.matrix().matvec(beta.as_slice());
    let rss: f64 = y
        .values()
        .iter()
        .zip(&fitted)
        .map(|(yi, fi)| (yi - fi) * (yi - fi))
        .sum();
    Ok(rss / (2.0 * design.n() as f64) + config.lambda * les_penalty(beta, config, design.partition()))
}

/// Smallest penalty level at which the all-zero vector is optimal:
/// `max_{k,j} p_k |X_kjᵀ y| / (n alpha w_k)`, from the zero-point
/// subgradient condition (at beta = 0 every within-group share equals
/// `1/p_k`).
pub fn lambda_max(design: &GroupedDesign, y: &Response, alpha: f64, weights: &[f64]) -> f64 {
    assert_eq!(
        weights.len(),
        design.partition().num_groups(),
        "lambda_max: one weight per group required"
    );
    let n = design.n() as f64;
    let mut best = 0.0f64;
    for (k, group) in design.partition().groups().iter().enumerate() {
        let pk = group.len() as f64;
        for &j in group {
            let corr = dot(design.matrix().col(j), y.values()) / n;
            let cand = pk * corr.abs() / (alpha * weights[k]);
            best = best.max(cand);
        }
    }
    best
}

/// Predicts raw-scale responses for raw-scale rows using a standardized-scale
/// coefficient vector: applies the training transform to `x_raw` and adds the
/// training response mean back.
pub fn predict(
    design: &GroupedDesign,
    y: &Response,
    beta: &CoefficientVector,
    x_raw: &Mat,
) -> Result<Vec<f64>> {
    if x_raw.ncols() != design.p() {
        return Err(Error::DimensionMismatch(format!(
            "prediction rows have {} columns, design has {}",
            x_raw.ncols(),
            design.p()
        )));
    }
    let mut out = vec![y.original_mean(); x_raw.nrows()];
    for j in 0..design.p() {
        let b = beta[j];
        if b == 0.0 {
            continue;
        }
        let m = design.column_means()[j];
        let s = design.column_scales()[j];
        for (o, v) in out.iter_mut().zip(x_raw.col(j)) {
            *o += b * (v - m) / s;
        }
    }
    Ok(out)
}
