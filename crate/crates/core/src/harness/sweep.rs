//! Seeded sweeps over `(n, replicate, d)`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::model::{make_instance_with_noise, replicate_seed, CovarianceSpectrum, RegressionInstance};
use crate::numeric::quantile;
use crate::risk::{
    classical_bound, effective_rank, highdim_bound, j_star, min_norm_conditional_risk, oracle_conditional_risk, CrossTerm,
    EmpiricalProfile,
};
use crate::spectral::{EmpiricalSpectrum, Route};

/// One result row. `None` fields are absent; `reason` lists why, as
/// semicolon-separated codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub replicate: usize,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub sigma: f64,
    pub family: String,
    pub bias_sq: Option<f64>,
    pub variance: Option<f64>,
    pub total: Option<f64>,
    pub oracle_total: Option<f64>,
    pub min_norm_total: Option<f64>,
    pub excess_risk: Option<f64>,
    pub j_star: Option<usize>,
    pub eff_rank_d: Option<f64>,
    pub lambda_hat_d: Option<f64>,
    pub bound_classical: Option<f64>,
    pub bound_highdim: Option<f64>,
    pub reason: String,
}

/// Per-`(n, d)` distribution of the replicate results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub d: usize,
    /// Replicates with a finite PCR total.
    pub count: usize,
    pub median_total: Option<f64>,
    pub q10_total: Option<f64>,
    pub q90_total: Option<f64>,
    pub median_bias_sq: Option<f64>,
    pub median_variance: Option<f64>,
    pub median_oracle_total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SummaryRow>,
}

/// Shared, read-only state of a sweep.
pub(crate) struct SweepContext {
    pub(crate) config: ExperimentConfig,
    pub(crate) spectrum: CovarianceSpectrum,
    pub(crate) f_true: DVector<f64>,
    pub(crate) f_norm_sq: f64,
}

impl SweepContext {
    pub(crate) fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let spectrum = config.build_spectrum()?;
        let f_true = config.f_true.vector(&spectrum)?;
        Ok(Self {
            config: config.clone(),
            f_norm_sq: f_true.norm_squared(),
            spectrum,
            f_true,
        })
    }

    pub(crate) fn instance(&self, n: usize, replicate: usize) -> Result<RegressionInstance> {
        let c = &self.config;
        make_instance_with_noise(
            &self.spectrum,
            c.law,
            n,
            &self.f_true,
            c.sigma,
            c.noise_law,
            replicate_seed(c.seed, replicate as u64),
        )
    }
}

#[derive(Default)]
struct Reasons(Vec<&'static str>);

impl Reasons {
    fn push(&mut self, code: &'static str) {
        if !self.0.contains(&code) {
            self.0.push(code);
        }
    }

    /// `Some(v)` when `v` is finite, otherwise records `code`.
    fn finite(&mut self, v: Option<f64>, code: &'static str) -> Option<f64> {
        match v {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(code);
                None
            }
        }
    }

    fn join(&self) -> String {
        self.0.join(";")
    }
}

fn rank_code(e: &Error, rank: &'static str, other: &'static str) -> &'static str {
    if e.is_rank_deficiency() {
        rank
    } else {
        other
    }
}

fn replicate_rows(ctx: &SweepContext, n: usize, replicate: usize, levels: &[usize], j_star: Option<usize>) -> Vec<SweepRow> {
    let c = &ctx.config;
    let spectrum = &ctx.spectrum;
    let p = spectrum.p();
    let seed = replicate_seed(c.seed, replicate as u64);
    let blank = |d: usize| SweepRow {
        seed,
        replicate,
        n,
        p,
        d,
        sigma: c.sigma,
        family: c.spectrum.family().to_string(),
        bias_sq: None,
        variance: None,
        total: None,
        oracle_total: None,
        min_norm_total: None,
        excess_risk: None,
        j_star,
        eff_rank_d: None,
        lambda_hat_d: None,
        bound_classical: None,
        bound_highdim: None,
        reason: String::new(),
    };

    let prepared = ctx.instance(n, replicate).and_then(|inst| {
        let emp = EmpiricalSpectrum::compute(&inst.design, Route::Auto)?;
        let profile = EmpiricalProfile::new(spectrum, &emp)?;
        Ok((inst, emp, profile))
    });
    let (inst, emp, profile) = match prepared {
        Ok(t) => t,
        Err(_) => {
            return levels
                .iter()
                .map(|&d| SweepRow {
                    reason: "spectrum_failed".into(),
                    ..blank(d)
                })
                .collect();
        }
    };

    let m = n.min(p);
    let max_d = levels.iter().copied().filter(|&d| d <= m).max().unwrap_or(0).min(profile.available());
    let risks = profile.pcr_risk_path(&inst, max_d);
    let excess = profile.excess_risk_path(spectrum, max_d).ok();
    let cross = j_star.and_then(|j| profile.cross_trace_path(spectrum, j.min(max_d), max_d).ok());
    let min_norm = if c.min_norm && n <= p && levels.contains(&n) {
        Some(min_norm_conditional_risk(&inst))
    } else {
        None
    };

    levels
        .iter()
        .map(|&d| {
            let mut row = blank(d);
            let mut why = Reasons::default();
            if d > m {
                why.push("d_out_of_range");
            }
            if j_star.is_none() {
                why.push("no_j_star");
            }

            match risks.get(d) {
                Some(Ok(r)) => {
                    row.bias_sq = why.finite(Some(r.bias_sq), "non_finite");
                    row.variance = why.finite(Some(r.variance), "non_finite");
                    row.total = why.finite(Some(r.total), "non_finite");
                }
                Some(Err(e)) => why.push(rank_code(e, "pcr_rank_deficient", "pcr_failed")),
                None => why.push(if d > m { "d_out_of_range" } else { "pcr_rank_deficient" }),
            }

            if !c.oracle {
                why.push("oracle_disabled");
            } else if d > p {
                why.push("d_out_of_range");
            } else {
                match oracle_conditional_risk(&inst, d) {
                    Ok(r) => row.oracle_total = why.finite(Some(r.total), "non_finite"),
                    Err(e) => why.push(rank_code(&e, "oracle_rank_deficient", "oracle_failed")),
                }
            }

            match &min_norm {
                Some(Ok(r)) if d == n => row.min_norm_total = why.finite(Some(r.total), "non_finite"),
                Some(Err(e)) if d == n => why.push(rank_code(e, "min_norm_rank_deficient", "min_norm_failed")),
                _ if !c.min_norm => why.push("min_norm_disabled"),
                _ => why.push("min_norm_only_at_d_eq_n"),
            }

            row.excess_risk = why.finite(excess.as_ref().and_then(|v| v.get(d).copied()), "excess_risk_unavailable");
            row.eff_rank_d = why.finite(effective_rank(spectrum, d), "eff_rank_undefined");
            row.lambda_hat_d = if d == 0 {
                why.push("d_zero");
                None
            } else if d > m {
                None
            } else {
                Some(emp.lambda_hat(d))
            };
            row.bound_classical = why.finite(classical_bound(spectrum, ctx.f_norm_sq, c.sigma, n, d).ok(), "classical_undefined");

            if let Some(j) = j_star {
                if d < j {
                    why.push("d_below_j_star");
                } else if d > m {
                    // already flagged
                } else {
                    let term = cross.as_ref().and_then(|v| v.get(d).copied());
                    let bound = term.and_then(|x| highdim_bound(spectrum, ctx.f_norm_sq, c.sigma, n, j_star, c.constants.t, CrossTerm::Exact(x)).ok());
                    row.bound_highdim = why.finite(bound, "highdim_unavailable");
                }
            }
            row.reason = why.join();
            row
        })
        .collect()
}

/// Run every `(n, replicate)` task, replicates in parallel, and return rows
/// in canonical `(n, replicate, d)` order with a per-`(n, d)` summary.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    let ctx = SweepContext::new(config)?;
    let p = ctx.spectrum.p();
    let mut tasks = Vec::new();
    for &n in &config.n {
        let levels = config.d.levels(n, p);
        let js = j_star(&ctx.spectrum, n, config.constants.b)?;
        for r in 0..config.replicates {
            tasks.push((n, r, levels.clone(), js));
        }
    }
    let run = || -> Vec<Vec<SweepRow>> {
        tasks
            .par_iter()
            .map(|(n, r, levels, js)| replicate_rows(&ctx, *n, *r, levels, *js))
            .collect()
    };
    let chunks = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let mut rows: Vec<SweepRow> = chunks.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.n, r.replicate, r.d));
    let summary = summarize(&rows);
    Ok(SweepTable { rows, summary })
}

fn median_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| quantile(values, 0.5))
}

/// Median and 10/90% quantiles per `(n, d)`.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.n, r.d)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .map(|(n, d)| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.n == n && r.d == d).collect();
            let pick = |f: fn(&SweepRow) -> Option<f64>| -> Vec<f64> { group.iter().filter_map(|r| f(r)).collect() };
            let totals = pick(|r| r.total);
            SummaryRow {
                n,
                d,
                count: totals.len(),
                median_total: median_of(&totals),
                q10_total: (!totals.is_empty()).then(|| quantile(&totals, 0.1)),
                q90_total: (!totals.is_empty()).then(|| quantile(&totals, 0.9)),
                median_bias_sq: median_of(&pick(|r| r.bias_sq)),
                median_variance: median_of(&pick(|r| r.variance)),
                median_oracle_total: median_of(&pick(|r| r.oracle_total)),
            }
        })
        .collect()
}
