//! Verification suites binding the library invariants and the calibrated
//! statistical checks to a config.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{min_norm_fit, pcr_fit_with};
use crate::harness::calibration::{
    CLASSICAL_RATIO_K, COVERAGE, EXCESS_J_STAR_K, HIGHDIM_RATIO_K, LOWER_BIAS_MIN, ORACLE_RATIO_K, TRACE_CAP_K, UPPER_BIAS_K,
};
use crate::harness::sweep::SweepContext;
use crate::harness::ExperimentConfig;
use crate::model::{replicate_seed, sample_coefficients};
use crate::numeric::{median, quantile};
use crate::risk::{
    classical_bound, classical_condition_holds, conditional_risk, effective_rank, excess_risk_j_star_scale, excess_risk_split,
    highdim_bound, j_star, oracle_conditional_risk, oracle_risk_identity, prediction_error, projector_reconstruction_error,
    trace_cap, weighted_concentration_stat, ConcentrationMode, CrossTerm, EmpiricalProfile,
};
use crate::spectral::{EmpiricalSpectrum, Route};

/// Exact identities are checked to this relative tolerance.
pub const IDENTITY_TOL: f64 = 1e-10;
pub const DUALITY_TOL: f64 = 1e-9;
pub const INTERPOLATION_TOL: f64 = 1e-8;
/// Largest `p` for which dense `p x p` oracles are formed.
const DENSE_LIMIT: usize = 256;
/// Number of weights in the concentration suite.
const CONCENTRATION_WEIGHTS: usize = 50;
/// Quantile level `1 - 1/e` of the concentration statistics.
pub const CONCENTRATION_LEVEL: f64 = 0.632_120_558_828_557_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Classical,
    Highdim,
    Concentration,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Identities, Suite::Classical, Suite::Highdim, Suite::Concentration];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Classical => "classical",
            Suite::Highdim => "highdim",
            Suite::Concentration => "concentration",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown suite {s:?} (expected identities, classical, highdim or concentration)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub status: CheckStatus,
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
}

impl Check {
    fn new(name: &str, n: Option<usize>, d: Option<usize>) -> Self {
        Self {
            name: name.to_string(),
            n,
            d,
            status: CheckStatus::Skipped,
            statistic: None,
            threshold: None,
            detail: String::new(),
        }
    }

    /// Pass when `statistic <= threshold`.
    fn at_most(mut self, statistic: f64, threshold: f64) -> Self {
        self.status = if statistic <= threshold { CheckStatus::Pass } else { CheckStatus::Fail };
        self.statistic = Some(statistic);
        self.threshold = Some(threshold);
        self
    }

    /// Pass when `statistic >= threshold`.
    fn at_least(mut self, statistic: f64, threshold: f64) -> Self {
        self.status = if statistic >= threshold { CheckStatus::Pass } else { CheckStatus::Fail };
        self.statistic = Some(statistic);
        self.threshold = Some(threshold);
        self
    }

    fn skipped(mut self, detail: impl Into<String>) -> Self {
        self.status = CheckStatus::Skipped;
        self.detail = detail.into();
        self
    }

    fn detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub pass: bool,
    /// False when every check was skipped because its precondition failed.
    pub condition_met: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    fn new(suite: Suite, seed: u64, checks: Vec<Check>) -> Self {
        Self {
            suite,
            seed,
            pass: checks.iter().all(|c| c.status != CheckStatus::Fail),
            condition_met: checks.iter().any(|c| c.status != CheckStatus::Skipped),
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn verify(config: &ExperimentConfig, suite: Suite) -> Result<VerifyReport> {
    let checks = match suite {
        Suite::Identities => identities(config)?,
        Suite::Classical => classical(config)?,
        Suite::Highdim => highdim(config)?,
        Suite::Concentration => concentration(config)?,
    };
    Ok(VerifyReport::new(suite, config.seed, checks))
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

/// Worst defects of one replicate, `NaN`-free; `None` when not evaluated.
#[derive(Default, Clone, Copy)]
struct IdentityDefects {
    split: f64,
    mu_independence: f64,
    dense_projector: Option<f64>,
    duality: Option<f64>,
    min_norm: Option<f64>,
    interpolation: Option<f64>,
    oracle: Option<f64>,
    noiseless_bias: f64,
    profile: f64,
}

fn worst(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn identity_defects(ctx: &SweepContext, n: usize, replicate: usize) -> Result<IdentityDefects> {
    let spectrum = &ctx.spectrum;
    let p = spectrum.p();
    let inst = ctx.instance(n, replicate)?;
    let emp = EmpiricalSpectrum::compute(&inst.design, Route::Auto)?;
    let profile = EmpiricalProfile::new(spectrum, &emp)?;
    let levels: Vec<usize> = ctx.config.d.levels(n, p).into_iter().filter(|&d| d <= emp.rank()).collect();
    let mut out = IdentityDefects::default();
    let lam1 = spectrum.lambda(1);

    for &d in &levels {
        let mus = [0.0, spectrum.lambda(d + 1), spectrum.lambda(d.max(1)), 0.5 * lam1, lam1];
        let base = excess_risk_split(spectrum, &emp, d, 0.0)?;
        let base_sum = base.lower_part + base.upper_part;
        for mu in mus {
            let s = excess_risk_split(spectrum, &emp, d, mu)?;
            // Both parts vanish at d = 0 and d = p; measure against their
            // natural magnitude instead.
            let scale = spectrum.trace() + d as f64 * mu.abs();
            out.split = out.split.max(rel(s.lower_part + s.upper_part, s.total, scale));
            out.mu_independence = out.mu_independence.max(rel(s.lower_part + s.upper_part, base_sum, scale));
        }
        if p <= DENSE_LIMIT {
            let u = emp.top_right(d)?;
            let proj = u * u.transpose();
            let dense = projector_reconstruction_error(spectrum, &proj)? - spectrum.tail_trace(d, 1)?;
            out.dense_projector = worst(out.dense_projector, Some(rel(dense, base.total, spectrum.trace())));
        }
        if d >= 1 && d <= p {
            if let Ok(id) = oracle_risk_identity(&inst, d) {
                out.oracle = worst(out.oracle, Some(id.relative_defect()));
            }
        }
        let noiseless = inst.with_responses(&inst.design * &inst.f_true)?;
        let fit = pcr_fit_with(&noiseless, &emp, d)?;
        let risk = conditional_risk(&inst, &emp, d)?;
        let err = prediction_error(&fit.coefficients, &inst.f_true, spectrum);
        out.noiseless_bias = out.noiseless_bias.max(rel(err, risk.bias_sq, risk.bias_sq.max(spectrum.l2_norm_sq(&inst.f_true))));
        if let Some(Ok(fast)) = profile.pcr_risk_path(&inst, d).pop() {
            out.profile = out.profile.max(rel(fast.total, risk.total, risk.total));
        }
    }

    if p <= 2 * DENSE_LIMIT {
        let direct = EmpiricalSpectrum::compute(&inst.design, Route::Direct)?;
        let gram = EmpiricalSpectrum::compute(&inst.design, Route::Gram)?;
        let tol = direct.rank_tol();
        let scale = direct.lambda_hat(1);
        let mut defect = 0.0f64;
        for j in 1..=n.min(p) {
            let (a, b) = (direct.lambda_hat(j), gram.lambda_hat(j));
            if a > tol || b > tol {
                defect = defect.max(rel(a, b, scale));
            }
        }
        out.duality = Some(defect);
    }

    if n <= p && emp.rank() == n {
        let mn = min_norm_fit(&inst)?;
        let pcr = pcr_fit_with(&inst, &emp, n)?;
        out.min_norm = Some((&mn.coefficients - &pcr.coefficients).norm() / mn.coefficients.norm().max(f64::MIN_POSITIVE));
        let fitted = &inst.design * &mn.coefficients;
        out.interpolation = Some((fitted - &inst.responses).norm() / inst.responses.norm().max(f64::MIN_POSITIVE));
    }
    Ok(out)
}

fn identities(config: &ExperimentConfig) -> Result<Vec<Check>> {
    let ctx = SweepContext::new(config)?;
    let mut checks = Vec::new();
    for &n in &config.n {
        let per: Vec<IdentityDefects> = (0..config.replicates)
            .into_par_iter()
            .map(|r| identity_defects(&ctx, n, r))
            .collect::<Result<_>>()?;
        let max = |f: fn(&IdentityDefects) -> f64| per.iter().map(f).fold(0.0, f64::max);
        let max_opt = |f: fn(&IdentityDefects) -> Option<f64>| per.iter().map(f).fold(None, worst);
        let opt_check = |name: &str, v: Option<f64>, tol: f64, why: &str| match v {
            Some(x) => Check::new(name, Some(n), None).at_most(x, tol),
            None => Check::new(name, Some(n), None).skipped(why),
        };
        checks.push(Check::new("excess_risk_split", Some(n), None).at_most(max(|x| x.split), IDENTITY_TOL));
        checks.push(Check::new("split_mu_independence", Some(n), None).at_most(max(|x| x.mu_independence), IDENTITY_TOL));
        checks.push(opt_check("dense_projector_oracle", max_opt(|x| x.dense_projector), IDENTITY_TOL, "p too large for dense projectors"));
        checks.push(opt_check("gram_duality", max_opt(|x| x.duality), DUALITY_TOL, "p too large for the direct route"));
        checks.push(opt_check("min_norm_equals_pcr_at_n", max_opt(|x| x.min_norm), INTERPOLATION_TOL, "needs n <= p and full rank"));
        checks.push(opt_check("min_norm_interpolates", max_opt(|x| x.interpolation), INTERPOLATION_TOL, "needs n <= p and full rank"));
        checks.push(opt_check("oracle_projection_identity", max_opt(|x| x.oracle), IDENTITY_TOL, "no oracle level evaluated"));
        checks.push(Check::new("noiseless_fit_error_equals_bias", Some(n), None).at_most(max(|x| x.noiseless_bias), DUALITY_TOL));
        checks.push(Check::new("risk_path_matches_direct", Some(n), None).at_most(max(|x| x.profile), DUALITY_TOL));
    }
    Ok(checks)
}

/// Per-seed PCR and oracle risks with the classical bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassicalStat {
    pub total: f64,
    pub oracle_total: f64,
    pub bound: f64,
}

/// Classical-regime statistics at sample size `n` for every level of the
/// config grid with `1 <= d < p`.
pub fn classical_stats(config: &ExperimentConfig, n: usize) -> Result<Vec<(usize, Vec<ClassicalStat>)>> {
    let ctx = SweepContext::new(config)?;
    let spectrum = &ctx.spectrum;
    let levels: Vec<usize> = config.d.levels(n, spectrum.p()).into_iter().filter(|&d| d >= 1 && d < spectrum.p() && d <= n).collect();
    let per_seed: Vec<Vec<ClassicalStat>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<ClassicalStat>> {
            let inst = ctx.instance(n, r)?;
            let emp = EmpiricalSpectrum::compute(&inst.design, Route::Auto)?;
            levels
                .iter()
                .map(|&d| {
                    Ok(ClassicalStat {
                        total: conditional_risk(&inst, &emp, d)?.total,
                        oracle_total: oracle_conditional_risk(&inst, d)?.total,
                        bound: classical_bound(spectrum, ctx.f_norm_sq, config.sigma, n, d)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(i, &d)| (d, per_seed.iter().map(|v| v[i]).collect()))
        .collect())
}

fn classical(config: &ExperimentConfig) -> Result<Vec<Check>> {
    let spectrum = config.build_spectrum()?;
    let c1 = config.constants.c1;
    let mut checks = Vec::new();
    for &n in &config.n {
        let levels: Vec<usize> = config.d.levels(n, spectrum.p()).into_iter().filter(|&d| d >= 1).collect();
        let (met, unmet): (Vec<usize>, Vec<usize>) = levels.iter().partition(|&&d| classical_condition_holds(&spectrum, n, d, c1));
        for d in unmet {
            let r = effective_rank(&spectrum, d).unwrap_or(f64::INFINITY);
            let why = format!("condition_not_met: max(d, tr_>d/lambda_(d+1)) = {:.4e} > c1 n = {:.4e}", (d as f64).max(r), c1 * n as f64);
            checks.push(Check::new("classical_bound", Some(n), Some(d)).skipped(why.clone()));
            checks.push(Check::new("pcr_vs_oracle", Some(n), Some(d)).skipped(why));
        }
        if met.is_empty() {
            continue;
        }
        let sub = ExperimentConfig {
            d: crate::harness::DGrid::List(met),
            ..config.clone()
        };
        for (d, stats) in classical_stats(&sub, n)? {
            let totals: Vec<f64> = stats.iter().map(|s| s.total).collect();
            let oracles: Vec<f64> = stats.iter().map(|s| s.oracle_total).collect();
            let bound = stats[0].bound;
            checks.push(Check::new("classical_bound", Some(n), Some(d)).at_most(median(&totals) / bound, CLASSICAL_RATIO_K).detail("median PCR risk / classical bound"));
            checks.push(Check::new("pcr_vs_oracle", Some(n), Some(d)).at_most(median(&totals) / median(&oracles), ORACLE_RATIO_K).detail("median PCR risk / median oracle risk"));
        }
    }
    Ok(checks)
}

/// Per-seed statistics of the high-dimensional regime at `d = n`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HighdimStat {
    pub j_star: usize,
    /// `lambda_hat_n n / tr_{>n}(Sigma)`
    pub lower_bias: f64,
    /// `lambda_hat_{j*+1} n / tr_{>n}(Sigma)`
    pub upper_bias: f64,
    /// Cross trace at `d = n` over the trace cap.
    pub cap_ratio: f64,
    /// `E_{<=j*}(0) / (j* tr_{>j*}(Sigma) / n)`; zero when `j* = 0`.
    pub excess_ratio: f64,
    /// PCR risk at `d = n` over the high-dimensional bound.
    pub risk_ratio: f64,
    /// `max_d (cross_d - lambda_{j*+1}(d - j*)) / (lambda_{j*+1} n)`.
    pub envelope_excess: f64,
}

/// High-dimensional statistics at sample size `n` (requires `j* < n <= p`).
pub fn highdim_stats(config: &ExperimentConfig, n: usize) -> Result<Vec<HighdimStat>> {
    let ctx = SweepContext::new(config)?;
    let spectrum = &ctx.spectrum;
    let p = spectrum.p();
    let js = j_star(spectrum, n, config.constants.b)?.ok_or_else(|| Error::Precondition(format!("no j* at n = {n}")))?;
    if js >= n || n > p {
        return Err(Error::Precondition(format!("need j* < n <= p (j* = {js}, n = {n}, p = {p})")));
    }
    let tail_n = spectrum.tail_trace(n, 1)?;
    (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let inst = ctx.instance(n, r)?;
            let emp = EmpiricalSpectrum::compute(&inst.design, Route::Auto)?;
            emp.require_rank(n)?;
            let profile = EmpiricalProfile::new(spectrum, &emp)?;
            let cross = profile.cross_trace_path(spectrum, js, n)?;
            let risk = conditional_risk(&inst, &emp, n)?;
            let bound = highdim_bound(spectrum, ctx.f_norm_sq, config.sigma, n, Some(js), config.constants.t, CrossTerm::Exact(cross[n]))?;
            let lam_next = spectrum.lambda(js + 1);
            let envelope_excess = ((js + 1)..=n)
                .map(|d| (cross[d] - lam_next * (d - js) as f64) / (lam_next * n as f64))
                .fold(f64::NEG_INFINITY, f64::max);
            let excess_ratio = if js == 0 {
                0.0
            } else {
                profile.excess_risk_path(spectrum, js)?[js] / excess_risk_j_star_scale(spectrum, n, js, 1.0)
            };
            Ok(HighdimStat {
                j_star: js,
                lower_bias: emp.lambda_hat(n) * n as f64 / tail_n,
                upper_bias: emp.lambda_hat(js + 1) * n as f64 / tail_n,
                cap_ratio: cross[n] / trace_cap(spectrum, n, js),
                excess_ratio,
                risk_ratio: risk.total / bound,
                envelope_excess,
            })
        })
        .collect()
}

fn fraction(stats: &[HighdimStat], pred: impl Fn(&HighdimStat) -> bool) -> f64 {
    stats.iter().filter(|s| pred(s)).count() as f64 / stats.len() as f64
}

fn highdim(config: &ExperimentConfig) -> Result<Vec<Check>> {
    let spectrum = config.build_spectrum()?;
    let names = ["upper_bias", "trace_cap", "excess_risk_j_star", "cross_envelope", "risk_to_bound"];
    let mut checks = Vec::new();
    for &n in &config.n {
        let js = j_star(&spectrum, n, config.constants.b)?;
        let reason = match js {
            None => Some("condition_not_met: no j* (classical regime)".to_string()),
            Some(j) if j >= n => Some(format!("condition_not_met: j* = {j} >= n")),
            Some(_) if n > spectrum.p() => Some("condition_not_met: n > p".to_string()),
            Some(_) => None,
        };
        if let Some(why) = reason {
            checks.extend(names.iter().map(|name| Check::new(name, Some(n), Some(n)).skipped(why.clone())));
            continue;
        }
        let stats = highdim_stats(config, n)?;
        let js = stats[0].j_star;
        checks.push(
            Check::new("upper_bias", Some(n), Some(n))
                .at_least(fraction(&stats, |s| s.lower_bias >= LOWER_BIAS_MIN && s.upper_bias <= UPPER_BIAS_K), COVERAGE)
                .detail(format!("fraction with lambda_hat_n n/tr_>n >= {LOWER_BIAS_MIN} and lambda_hat_(j*+1) n/tr_>n <= {UPPER_BIAS_K}")),
        );
        checks.push(
            Check::new("trace_cap", Some(n), Some(n))
                .at_least(fraction(&stats, |s| s.cap_ratio <= TRACE_CAP_K), COVERAGE)
                .detail(format!("fraction with cross trace <= {TRACE_CAP_K} x trace cap")),
        );
        let excess = Check::new("excess_risk_j_star", Some(n), Some(js));
        checks.push(if js == 0 {
            excess.skipped("j* = 0: empty head")
        } else {
            excess
                .at_least(fraction(&stats, |s| s.excess_ratio <= EXCESS_J_STAR_K), COVERAGE)
                .detail(format!("fraction with E_(<=j*) <= {EXCESS_J_STAR_K} x j* tr_>j*/n"))
        });
        let envelope = stats.iter().map(|s| s.envelope_excess).fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new("cross_envelope", Some(n), Some(n)).at_most(envelope, 1e-12).detail("max (cross_d - lambda_(j*+1)(d - j*)) / (lambda_(j*+1) n)"));
        let ratios: Vec<f64> = stats.iter().map(|s| s.risk_ratio).collect();
        checks.push(Check::new("risk_to_bound", Some(n), Some(n)).at_most(median(&ratios), HIGHDIM_RATIO_K).detail("median PCR risk at d = n / high-dimensional bound"));
    }
    Ok(checks)
}

/// `1 - 1/e` quantiles of `n^power * stat / ||a||_1` at sample size `n`.
pub fn concentration_quantile(
    weights: &[f64],
    law: crate::model::CoefficientLaw,
    n: usize,
    draws: usize,
    seed: u64,
    mode: ConcentrationMode,
    power: f64,
) -> Result<f64> {
    let norm: f64 = weights.iter().sum();
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|r| {
            let x = sample_coefficients(law, n, weights.len(), replicate_seed(seed, r as u64));
            weighted_concentration_stat(weights, &x, mode).map(|s| (n as f64).powf(power) * s / norm)
        })
        .collect::<Result<_>>()?;
    Ok(quantile(&values, CONCENTRATION_LEVEL))
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

fn concentration(config: &ExperimentConfig) -> Result<Vec<Check>> {
    let spectrum = config.build_spectrum()?;
    let weights: Vec<f64> = spectrum.eigenvalues().iter().copied().take(CONCENTRATION_WEIGHTS).collect();
    let draws = config.replicates.max(100);
    let mut checks = Vec::new();
    for (mode, name, power) in [(ConcentrationMode::Square, "square_rate", 1.0), (ConcentrationMode::Linear, "linear_rate", 0.5)] {
        let check = Check::new(name, None, None);
        if config.n.len() < 2 {
            checks.push(check.skipped("needs at least two sample sizes"));
            continue;
        }
        let qs = config
            .n
            .iter()
            .map(|&n| concentration_quantile(&weights, config.law, n, draws, config.seed, mode, power))
            .collect::<Result<Vec<f64>>>()?;
        checks.push(check.at_most(spread(&qs), 2.0).detail(format!("max/min over n of the 1-1/e quantile of n^{power} stat/||a||_1: {qs:?}")));
    }
    Ok(checks)
}
