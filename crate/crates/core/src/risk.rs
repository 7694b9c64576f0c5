//! Exact risk functionals, PCA excess risk, regime diagnostics and the
//! theory-side bound evaluators.
//!
//! Every `||g||^2_{L2(P^X)}` is the analytic quadratic form `<g, Sigma g>`.
//! Bound evaluators set all unnamed constants to one; callers calibrate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{invertible_gram, oracle_fit, EstimatorFamily, OracleSystem};
use crate::model::{CovarianceSpectrum, RegressionInstance};
use crate::numeric::{sum, CompensatedSum};
use crate::spectral::{sym_eigenvalues, EmpiricalSpectrum, SymMatrix};

/// Conditional (on the design) mean squared prediction error, split into
/// bias and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub bias_sq: f64,
    pub variance: f64,
    pub total: f64,
    pub d: usize,
    pub family: EstimatorFamily,
}

impl RiskReport {
    fn new(bias_sq: f64, variance: f64, d: usize, family: EstimatorFamily) -> Self {
        Self {
            bias_sq,
            variance,
            total: bias_sq + variance,
            d,
            family,
        }
    }
}

/// `<f_hat - f, Sigma (f_hat - f)>`.
pub fn prediction_error(coefficients: &DVector<f64>, f_true: &DVector<f64>, spectrum: &CovarianceSpectrum) -> f64 {
    spectrum.l2_norm_sq(&(coefficients - f_true))
}

/// Sum over columns `j` of `w_j * ||col_j||^2_{L2}`.
fn weighted_l2_columns(spectrum: &CovarianceSpectrum, m: &DMatrix<f64>, weights: impl Fn(usize) -> f64) -> f64 {
    let coords = spectrum.to_eigen_coords_mat(m);
    let lambdas = spectrum.eigenvalues();
    let mut acc = CompensatedSum::new();
    for (j, col) in coords.column_iter().enumerate() {
        let norm = sum(col.iter().zip(lambdas).map(|(x, l)| l * x * x));
        acc.add(weights(j) * norm);
    }
    acc.value()
}

/// PCR bias `||P_hat_{>d} f||^2_{L2}` and variance
/// `sigma^2/n sum_{j<=d} ||u_hat_j||^2_{L2} / lambda_hat_j`.
pub fn conditional_risk(instance: &RegressionInstance, empirical: &EmpiricalSpectrum, d: usize) -> Result<RiskReport> {
    let (n, p) = (instance.n(), instance.p());
    if d > n.min(p) {
        return Err(Error::invalid(format!("truncation level {d} exceeds min(n, p) = {}", n.min(p))));
    }
    empirical.require_rank(d)?;
    let spectrum = &instance.spectrum;
    if d == 0 {
        return Ok(RiskReport::new(spectrum.l2_norm_sq(&instance.f_true), 0.0, 0, EstimatorFamily::Pcr));
    }
    let u = empirical.top_right(d)?;
    let residual = &instance.f_true - u * u.tr_mul(&instance.f_true);
    let bias_sq = spectrum.l2_norm_sq(&residual);
    let scale = instance.sigma * instance.sigma / n as f64;
    let variance = scale * weighted_l2_columns(spectrum, &u.into_owned(), |j| 1.0 / empirical.lambda_hat(j + 1));
    Ok(RiskReport::new(bias_sq, variance, d, EstimatorFamily::Pcr))
}

/// Conditional risk of oracle PCR: bias of the projected least-squares mean
/// and variance `sigma^2 sum_j lambda_j [(Z^T Z)^{-1}]_{jj}`.
pub fn oracle_conditional_risk(instance: &RegressionInstance, d: usize) -> Result<RiskReport> {
    if d > instance.p() {
        return Err(Error::invalid(format!("truncation level {d} exceeds p = {}", instance.p())));
    }
    let spectrum = &instance.spectrum;
    if d == 0 {
        return Ok(RiskReport::new(spectrum.l2_norm_sq(&instance.f_true), 0.0, 0, EstimatorFamily::Oracle));
    }
    let system = OracleSystem::new(instance, d)?;
    let mean = system.fit(&(&instance.design * &instance.f_true));
    let bias_sq = spectrum.l2_norm_sq(&(mean - &instance.f_true));
    let inv_diag = system.factor.inverse_diagonal();
    let variance = instance.sigma * instance.sigma * sum((0..d).map(|j| spectrum.lambda(j + 1) * inv_diag[j]));
    Ok(RiskReport::new(bias_sq, variance, d, EstimatorFamily::Oracle))
}

/// Conditional risk of the minimum-norm interpolator, computed from its own
/// Gram decomposition.
pub fn min_norm_conditional_risk(instance: &RegressionInstance) -> Result<RiskReport> {
    let eig = invertible_gram(&instance.design)?;
    let n = instance.n() as f64;
    let kappas = eig.eigenvalues();
    // u_j = (n kappa_j)^{-1/2} X^T v_j
    let mut frame = instance.design.tr_mul(eig.eigenvectors());
    for (j, k) in kappas.iter().enumerate() {
        frame.column_mut(j).scale_mut(1.0 / (n * k).sqrt());
    }
    let residual = &instance.f_true - &frame * frame.tr_mul(&instance.f_true);
    let spectrum = &instance.spectrum;
    let bias_sq = spectrum.l2_norm_sq(&residual);
    let variance = instance.sigma * instance.sigma / n * weighted_l2_columns(spectrum, &frame, |j| 1.0 / kappas[j]);
    Ok(RiskReport::new(bias_sq, variance, instance.n(), EstimatorFamily::MinNorm))
}

/// Which rank-`d` projector a reconstruction error refers to.
#[derive(Debug, Clone, Copy)]
pub enum ProjectorBasis<'a> {
    Population,
    Empirical(&'a EmpiricalSpectrum),
}

/// Squared loadings `a_k = sum_{j<=d} <u_hat_j, u_k>^2` for every population
/// direction `k`.
fn loadings(spectrum: &CovarianceSpectrum, empirical: &EmpiricalSpectrum, from: usize, to: usize) -> Result<Vec<f64>> {
    if to > empirical.available_vectors() {
        return Err(Error::invalid(format!(
            "{to} empirical eigenvectors needed, {} available",
            empirical.available_vectors()
        )));
    }
    let frame = empirical.right_frame().columns(from, to - from).into_owned();
    let coords = spectrum.to_eigen_coords_mat(&frame);
    Ok(coords.row_iter().map(|row| sum(row.iter().map(|x| x * x))).collect())
}

/// `R(P) = E||X - P X||^2` for the first `d` population or empirical
/// eigenvectors.
pub fn reconstruction_error(spectrum: &CovarianceSpectrum, basis: ProjectorBasis<'_>, d: usize) -> Result<f64> {
    if d > spectrum.p() {
        return Err(Error::invalid(format!("projector rank {d} exceeds p = {}", spectrum.p())));
    }
    match basis {
        ProjectorBasis::Population => spectrum.tail_trace(d, 1),
        ProjectorBasis::Empirical(emp) => {
            let a = loadings(spectrum, emp, 0, d)?;
            Ok(spectrum.trace() - sum(a.iter().zip(spectrum.eigenvalues()).map(|(a, l)| a * l)))
        }
    }
}

/// `tr(Sigma) - tr(P Sigma)` for an explicit orthogonal projector.
pub fn projector_reconstruction_error(spectrum: &CovarianceSpectrum, projector: &DMatrix<f64>) -> Result<f64> {
    let p = spectrum.p();
    if projector.shape() != (p, p) {
        return Err(Error::invalid(format!("projector must be {p}x{p}")));
    }
    let idempotency = (projector * projector - projector).amax();
    let asymmetry = (projector - projector.transpose()).amax();
    if idempotency > 1e-8 || asymmetry > 1e-8 {
        return Err(Error::invalid(format!(
            "not an orthogonal projector (||P^2 - P|| = {idempotency:e}, asymmetry {asymmetry:e})"
        )));
    }
    let sigma = spectrum.covariance_matrix();
    let tr_p_sigma = sum(projector.iter().zip(sigma.transpose().iter()).map(|(a, b)| a * b));
    Ok(spectrum.trace() - tr_p_sigma)
}

/// Excess risk of the empirical projector split at level `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskSplit {
    pub mu: f64,
    /// `sum_{j<=d} (lambda_j - mu) ||P_j P_hat_{>d}||_2^2`
    pub lower_part: f64,
    /// `sum_{k>d} (mu - lambda_k) ||P_k P_hat_{<=d}||_2^2`
    pub upper_part: f64,
    /// `sum_{j<=d} lambda_j - tr(P_hat_{<=d} Sigma)`
    pub total: f64,
}

pub fn excess_risk_split(spectrum: &CovarianceSpectrum, empirical: &EmpiricalSpectrum, d: usize, mu: f64) -> Result<ExcessRiskSplit> {
    let p = spectrum.p();
    if d > p {
        return Err(Error::invalid(format!("level {d} exceeds p = {p}")));
    }
    if !mu.is_finite() {
        return Err(Error::invalid("mu must be finite"));
    }
    let a = loadings(spectrum, empirical, 0, d)?;
    let lambdas = spectrum.eigenvalues();
    let lower_part = sum((0..d).map(|j| (lambdas[j] - mu) * (1.0 - a[j])));
    let upper_part = sum((d..p).map(|k| (mu - lambdas[k]) * a[k]));
    let total = sum((0..d).map(|j| lambdas[j] * (1.0 - a[j])).chain((d..p).map(|k| -lambdas[k] * a[k])));
    Ok(ExcessRiskSplit {
        mu,
        lower_part,
        upper_part,
        total,
    })
}

/// `R(P_hat_{<=d}) - tr_{>d}(Sigma)`.
pub fn excess_risk(spectrum: &CovarianceSpectrum, empirical: &EmpiricalSpectrum, d: usize) -> Result<f64> {
    Ok(excess_risk_split(spectrum, empirical, d, 0.0)?.total)
}

/// Effective ranks, `j*`, effective dimensions and eigenvalue-bias ratios.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    /// `tr_{>d}(Sigma) / lambda_{d+1}` for `d = 0..p-1`.
    pub effective_ranks: Vec<f64>,
    pub j_star: Option<usize>,
    /// `(mu, N(mu))` pairs.
    pub effective_dimension: Vec<(f64, f64)>,
    /// `lambda_hat_j / lambda_j` for `j <= j*`.
    pub lower_bias_ratios: Vec<f64>,
    /// `lambda_hat_j n / tr_{>n}(Sigma)` for `j* < j <= n`.
    pub upper_bias_ratios: Vec<f64>,
}

/// `tr_{>d}(Sigma) / lambda_{d+1}` (infinite when `lambda_{d+1} = 0`).
pub fn effective_rank(spectrum: &CovarianceSpectrum, d: usize) -> Option<f64> {
    if d >= spectrum.p() {
        return None;
    }
    let lam = spectrum.lambda(d + 1);
    Some(if lam > 0.0 { spectrum.tail(d) / lam } else { f64::INFINITY })
}

/// Effective-rank curve and `j* = min{j >= 0 : tr_{>j}/lambda_{j+1} >= B n}`.
pub fn effective_rank_curve(spectrum: &CovarianceSpectrum, n: usize, b: f64) -> Result<RegimeDiagnostics> {
    if !(b > 1.0) {
        return Err(Error::invalid(format!("B must exceed 1, got {b}")));
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let effective_ranks: Vec<f64> = (0..spectrum.p()).map(|d| effective_rank(spectrum, d).expect("d < p")).collect();
    let threshold = b * n as f64;
    let j_star = effective_ranks.iter().position(|&r| r >= threshold);
    Ok(RegimeDiagnostics {
        effective_ranks,
        j_star,
        ..Default::default()
    })
}

pub fn j_star(spectrum: &CovarianceSpectrum, n: usize, b: f64) -> Result<Option<usize>> {
    Ok(effective_rank_curve(spectrum, n, b)?.j_star)
}

/// `N(mu) = sum_j lambda_j / (lambda_j + mu)`.
pub fn effective_dimension(spectrum: &CovarianceSpectrum, mu: f64) -> Result<f64> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::invalid(format!("mu must be finite and >= 0, got {mu}")));
    }
    Ok(sum(spectrum.eigenvalues().iter().map(|&l| if l > 0.0 { l / (l + mu) } else { 0.0 })))
}

/// Operator norm of `(Sigma + mu)^{-1/2} (Sigma_hat - Sigma) (Sigma + mu)^{-1/2}`.
pub fn relative_perturbation_norm(spectrum: &CovarianceSpectrum, empirical_cov: &SymMatrix, mu: f64) -> Result<f64> {
    let p = spectrum.p();
    if empirical_cov.dim() != p {
        return Err(Error::invalid(format!("covariance must be {p}x{p}")));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::invalid(format!("mu must be finite and >= 0, got {mu}")));
    }
    if mu == 0.0 && spectrum.lambda(p) <= 0.0 {
        return Err(Error::invalid("mu = 0 requires a positive definite covariance"));
    }
    let cov = match spectrum.basis() {
        Some(q) => q.tr_mul(empirical_cov.as_matrix()) * q,
        None => empirical_cov.as_matrix().clone(),
    };
    let scale: Vec<f64> = spectrum.eigenvalues().iter().map(|l| 1.0 / (l + mu).sqrt()).collect();
    let lambdas = spectrum.eigenvalues();
    let w = DMatrix::from_fn(p, p, |a, b| {
        let diff = cov[(a, b)] - if a == b { lambdas[a] } else { 0.0 };
        diff * scale[a] * scale[b]
    });
    let values = sym_eigenvalues(&SymMatrix::new(w)?)?;
    Ok(values[0].abs().max(values[p - 1].abs()))
}

/// Eigenvalue-bias ratios: `lambda_hat_j / lambda_j` for `j <= j*` and
/// `lambda_hat_j n / tr_{>n}(Sigma)` for `j* < j <= n`.
pub fn eigen_bias_report(spectrum: &CovarianceSpectrum, empirical: &EmpiricalSpectrum, n: usize, j_star: usize) -> Result<RegimeDiagnostics> {
    if j_star >= n {
        return Err(Error::Precondition(format!("j* = {j_star} must be below n = {n}")));
    }
    let tail_n = spectrum.tail(n);
    if !(tail_n > 0.0) {
        return Err(Error::Precondition(format!("tr_{{>{n}}}(Sigma) vanishes")));
    }
    let lower_bias_ratios = (1..=j_star).map(|j| empirical.lambda_hat(j) / spectrum.lambda(j)).collect();
    let upper_bias_ratios = ((j_star + 1)..=n).map(|j| empirical.lambda_hat(j) * n as f64 / tail_n).collect();
    Ok(RegimeDiagnostics {
        j_star: Some(j_star),
        lower_bias_ratios,
        upper_bias_ratios,
        ..Default::default()
    })
}

/// `lambda_{d+1} ||f||^2 + sigma^2 d / n`.
pub fn classical_bound(spectrum: &CovarianceSpectrum, f_norm_sq: f64, sigma: f64, n: usize, d: usize) -> Result<f64> {
    if d >= spectrum.p() {
        return Err(Error::invalid(format!("level {d} must be below p = {}", spectrum.p())));
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    Ok(spectrum.lambda(d + 1) * f_norm_sq + sigma * sigma * d as f64 / n as f64)
}

/// `max(d, tr_{>d}/lambda_{d+1}) <= c n`.
pub fn classical_condition_holds(spectrum: &CovarianceSpectrum, n: usize, d: usize, c: f64) -> bool {
    match effective_rank(spectrum, d) {
        Some(r) => (d as f64).max(r) <= c * n as f64,
        None => false,
    }
}

/// The variance cross term of the high-dimensional bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossTerm {
    /// `sum_{j*<j<=d} tr(P_hat_j Sigma_{>j*})`, e.g. from
    /// [`cross_projected_trace`].
    Exact(f64),
    /// The `d = n` cap `n tr_{>j*}(Sigma^2) / tr_{>j*}(Sigma)`.
    TraceCap,
}

/// `n tr_{>j*}(Sigma^2) / tr_{>j*}(Sigma)`.
pub fn trace_cap(spectrum: &CovarianceSpectrum, n: usize, j_star: usize) -> f64 {
    n as f64 * spectrum.tail_sq(j_star) / spectrum.tail(j_star)
}

/// `(tr_{>j*}/n) ||f||^2 + t^2 sigma^2 j*/n + sigma^2/tr_{>j*} * cross`.
pub fn highdim_bound(
    spectrum: &CovarianceSpectrum,
    f_norm_sq: f64,
    sigma: f64,
    n: usize,
    j_star: Option<usize>,
    t: f64,
    cross: CrossTerm,
) -> Result<f64> {
    let j = j_star.ok_or_else(|| Error::Precondition("no j* for this (spectrum, n, B); use classical_bound".into()))?;
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let tail = spectrum.tail(j);
    if !(tail > 0.0) {
        return Err(Error::Precondition(format!("tr_{{>{j}}}(Sigma) vanishes")));
    }
    let cross = match cross {
        CrossTerm::Exact(v) => v,
        CrossTerm::TraceCap => trace_cap(spectrum, n, j),
    };
    let nf = n as f64;
    let s2 = sigma * sigma;
    Ok(tail / nf * f_norm_sq + t * t * s2 * j as f64 / nf + s2 / tail * cross)
}

/// `sum_{j*<j<=d} sum_{k>j*} lambda_k <u_hat_j, u_k>^2`.
pub fn cross_projected_trace(empirical: &EmpiricalSpectrum, spectrum: &CovarianceSpectrum, j_star: usize, d: usize) -> Result<f64> {
    let m = empirical.n().min(spectrum.p());
    if !(j_star < d && d <= m) {
        return Err(Error::invalid(format!("need j* < d <= min(n, p): j* = {j_star}, d = {d}, min(n, p) = {m}")));
    }
    let a = loadings(spectrum, empirical, j_star, d)?;
    Ok(sum(a.iter().zip(spectrum.eigenvalues()).skip(j_star).map(|(a, l)| a * l)))
}

/// Deterministic evaluation of the high-probability excess-risk bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessRiskBound {
    /// `(t^2/n) sum_{j<=r} lambda_j tr_{>r}(Sigma) / (lambda_j - lambda_{d+1})`
    pub value: f64,
    /// Largest index with `lambda_r > mu`.
    pub r: usize,
    /// Left-hand side of the validity condition (compared to `c1 n`).
    pub condition_lhs: f64,
    pub condition_holds: bool,
}

pub fn excess_risk_bound_diag(spectrum: &CovarianceSpectrum, n: usize, d: usize, mu: f64, t: f64, c1: f64) -> Result<ExcessRiskBound> {
    if d == 0 || n == 0 {
        return Err(Error::invalid("need d >= 1 and n >= 1"));
    }
    let lam_next = spectrum.lambda(d + 1);
    if !(mu >= lam_next) {
        return Err(Error::Precondition(format!("mu = {mu} must be >= lambda_(d+1) = {lam_next}")));
    }
    let r = spectrum.eigenvalues().iter().take_while(|&&l| l > mu).count();
    if r == 0 {
        return Ok(ExcessRiskBound {
            value: 0.0,
            r,
            condition_lhs: 0.0,
            condition_holds: true,
        });
    }
    let gaps: Vec<f64> = (1..=r).map(|j| spectrum.lambda(j) - lam_next).collect();
    if let Some(j) = gaps.iter().position(|&g| !(g > 0.0)) {
        return Err(Error::Precondition(format!("lambda_{} equals lambda_(d+1)", j + 1)));
    }
    let lam_r = spectrum.lambda(r);
    let tail_r = spectrum.tail(r);
    let value = t * t / n as f64 * sum((1..=r).map(|j| spectrum.lambda(j) * tail_r / gaps[j - 1]));
    let head = sum((1..=r).map(|j| spectrum.lambda(j) / gaps[j - 1]));
    let tail_sum = sum(spectrum.eigenvalues().iter().skip(d).map(|&l| l / (lam_r - l)));
    let condition_lhs = lam_r / (lam_r - lam_next) * head.max(tail_sum);
    Ok(ExcessRiskBound {
        value,
        r,
        condition_lhs,
        condition_holds: condition_lhs <= c1 * n as f64,
    })
}

/// Scale `t^2 j* tr_{>j*}(Sigma) / n` of the `E_{<=j*}(0)` bound.
pub fn excess_risk_j_star_scale(spectrum: &CovarianceSpectrum, n: usize, j_star: usize, t: f64) -> f64 {
    t * t * j_star as f64 * spectrum.tail(j_star) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConcentrationMode {
    /// `sum_j a_j (mean_i X_ij)^2`
    Square,
    /// `sum_j a_j mean_i X_ij`
    Linear,
}

/// Weighted statistic over an `n x J` sample matrix (column `j` holds the
/// `n` draws of coordinate `j`).
pub fn weighted_concentration_stat(weights: &[f64], samples: &DMatrix<f64>, mode: ConcentrationMode) -> Result<f64> {
    if weights.len() != samples.ncols() {
        return Err(Error::invalid(format!("{} weights for {} columns", weights.len(), samples.ncols())));
    }
    if samples.nrows() == 0 {
        return Err(Error::invalid("no samples"));
    }
    if weights.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let n = samples.nrows() as f64;
    Ok(sum(samples.column_iter().zip(weights).map(|(col, a)| {
        let mean = sum(col.iter().copied()) / n;
        match mode {
            ConcentrationMode::Square => a * mean * mean,
            ConcentrationMode::Linear => a * mean,
        }
    })))
}

/// Projection-theorem split of the oracle prediction error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRiskIdentity {
    /// `||f_hat - P_{<=d} f||^2_{L2}`
    pub cross_fit_err: f64,
    /// `||P_{>d} f||^2_{L2} = sum_{k>d} lambda_k <f, u_k>^2`
    pub tail_bias: f64,
    /// `||f_hat - f||^2_{L2}`
    pub prediction_error: f64,
}

impl OracleRiskIdentity {
    /// `|cross + tail - total| / max(total, tiny)`.
    pub fn relative_defect(&self) -> f64 {
        let lhs = self.cross_fit_err + self.tail_bias;
        (lhs - self.prediction_error).abs() / self.prediction_error.max(f64::MIN_POSITIVE)
    }
}

pub fn oracle_risk_identity(instance: &RegressionInstance, d: usize) -> Result<OracleRiskIdentity> {
    let est = oracle_fit(instance, d)?;
    let spectrum = &instance.spectrum;
    let mut coords = spectrum.to_eigen_coords(&instance.f_true);
    let tail_bias = sum(coords.iter().zip(spectrum.eigenvalues()).skip(d).map(|(c, l)| l * c * c));
    for k in d..coords.len() {
        coords[k] = 0.0;
    }
    let head = spectrum.from_eigen_coords(&coords);
    Ok(OracleRiskIdentity {
        cross_fit_err: spectrum.l2_norm_sq(&(&est.coefficients - head)),
        tail_bias,
        prediction_error: prediction_error(&est.coefficients, &instance.f_true, spectrum),
    })
}

/// `||h||_n^2 = <h, Sigma_hat h>`.
pub fn empirical_norm_sq(empirical_cov: &SymMatrix, h: &DVector<f64>) -> f64 {
    h.dot(&(empirical_cov.as_matrix() * h))
}

/// Eigen coordinates of the available empirical eigenvectors, shared by the
/// per-level PCR risk, excess-risk and cross-trace paths.
#[derive(Debug, Clone)]
pub struct EmpiricalProfile {
    /// `p x m`, column `j` holds `<u_hat_j, u_k>` for every `k`.
    coords: DMatrix<f64>,
    /// `||u_hat_j||^2_{L2}`.
    weights: Vec<f64>,
    lambda_hat: Vec<f64>,
    rank: usize,
    rank_tol: f64,
    n: usize,
}

impl EmpiricalProfile {
    pub fn new(spectrum: &CovarianceSpectrum, empirical: &EmpiricalSpectrum) -> Result<Self> {
        if empirical.p() != spectrum.p() {
            return Err(Error::invalid("empirical and population dimensions differ"));
        }
        let coords = spectrum.to_eigen_coords_mat(empirical.right_frame());
        let lambdas = spectrum.eigenvalues();
        let weights = coords
            .column_iter()
            .map(|col| sum(col.iter().zip(lambdas).map(|(x, l)| l * x * x)))
            .collect();
        Ok(Self {
            coords,
            weights,
            lambda_hat: empirical.eigenvalues().to_vec(),
            rank: empirical.rank(),
            rank_tol: empirical.rank_tol(),
            n: empirical.n(),
        })
    }

    pub fn available(&self) -> usize {
        self.coords.ncols()
    }

    fn check_level(&self, d: usize) -> Result<()> {
        if d > self.available() {
            return Err(Error::invalid(format!("{d} empirical eigenvectors needed, {} available", self.available())));
        }
        Ok(())
    }

    /// `E_d(0)` for `d = 0..=max_d`.
    pub fn excess_risk_path(&self, spectrum: &CovarianceSpectrum, max_d: usize) -> Result<Vec<f64>> {
        self.check_level(max_d)?;
        let mut acc = CompensatedSum::new();
        let mut out = Vec::with_capacity(max_d + 1);
        out.push(0.0);
        for j in 0..max_d {
            acc.add(spectrum.eigenvalues()[j]);
            acc.add(-self.weights[j]);
            out.push(acc.value());
        }
        Ok(out)
    }

    /// Cross projected trace for `d = 0..=max_d` (zero for `d <= j*`).
    pub fn cross_trace_path(&self, spectrum: &CovarianceSpectrum, j_star: usize, max_d: usize) -> Result<Vec<f64>> {
        self.check_level(max_d)?;
        let lambdas = spectrum.eigenvalues();
        let mut acc = CompensatedSum::new();
        let mut out = vec![0.0; max_d + 1];
        for j in j_star..max_d {
            let col = self.coords.column(j);
            acc.add(sum(col.iter().zip(lambdas).skip(j_star).map(|(x, l)| l * x * x)));
            out[j + 1] = acc.value();
        }
        Ok(out)
    }

    /// PCR conditional risk for `d = 0..=max_d`; levels beyond the rank
    /// carry the rank-deficiency error.
    pub fn pcr_risk_path(&self, instance: &RegressionInstance, max_d: usize) -> Vec<Result<RiskReport>> {
        let spectrum = &instance.spectrum;
        let lambdas = spectrum.eigenvalues();
        let limit = self.n.min(spectrum.p());
        let mut residual = spectrum.to_eigen_coords(&instance.f_true);
        let scale = instance.sigma * instance.sigma / self.n as f64;
        let bias_of = |r: &DVector<f64>| sum(r.iter().zip(lambdas).map(|(x, l)| l * x * x));
        let mut out = Vec::with_capacity(max_d + 1);
        out.push(Ok(RiskReport::new(bias_of(&residual), 0.0, 0, EstimatorFamily::Pcr)));
        let mut variance = CompensatedSum::new();
        for d in 1..=max_d {
            if d > limit {
                out.push(Err(Error::invalid(format!("truncation level {d} exceeds min(n, p) = {limit}"))));
                continue;
            }
            if d > self.rank || d > self.available() {
                out.push(Err(Error::RankDeficient {
                    index: self.rank + 1,
                    value: self.lambda_hat.get(self.rank).copied().unwrap_or(0.0),
                    tolerance: self.rank_tol,
                }));
                continue;
            }
            let col = self.coords.column(d - 1);
            let beta = col.dot(&residual);
            residual.axpy(-beta, &col, 1.0);
            variance.add(self.weights[d - 1] / self.lambda_hat[d - 1]);
            out.push(Ok(RiskReport::new(bias_of(&residual), scale * variance.value(), d, EstimatorFamily::Pcr)));
        }
        out
    }
}
