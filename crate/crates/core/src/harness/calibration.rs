//! Frozen thresholds for the statistical checks and the calibration run
//! that produced them.
//!
//! Rule (fixed before the run): for each statistic, take the 99th
//! percentile over the calibration draws, multiply by [`INFLATION`] and round
//! up to two significant digits. Calibration seeds are derived from
//! [`CALIBRATION_SEED`], which no test or example config uses.

use serde::Serialize;

use crate::error::Result;
use crate::harness::config::{Constants, DGrid, ExperimentConfig, FTrue, OutputFormat, SCHEMA_VERSION};
use crate::harness::verify::{classical_stats, highdim_stats};
use crate::model::{CoefficientLaw, SpectrumSpec};
use crate::numeric::{median, quantile};

pub const CALIBRATION_SEED: u64 = 0xCA11_B2A7_E5EE_D000;
pub const CALIBRATION_QUANTILE: f64 = 0.99;
pub const INFLATION: f64 = 1.25;
pub const CALIBRATION_REPLICATES: usize = 200;

/// Bound on `lambda_hat_{j*+1} n / tr_{>n}(Sigma)`.
pub const UPPER_BIAS_K: f64 = 2.0;
/// Bound on the `d = n` cross trace over `n tr_{>j*}(Sigma^2)/tr_{>j*}(Sigma)`.
pub const TRACE_CAP_K: f64 = 1.3;
/// Bound on `E_{<=j*}(0)` over `j* tr_{>j*}(Sigma)/n`.
pub const EXCESS_J_STAR_K: f64 = 1.4;
/// Bound on PCR risk at `d = n` over the high-dimensional bound.
pub const HIGHDIM_RATIO_K: f64 = 0.39;
/// Bound on median PCR risk over the classical bound.
pub const CLASSICAL_RATIO_K: f64 = 0.79;
/// Bound on median PCR risk over median oracle risk.
pub const ORACLE_RATIO_K: f64 = 1.3;

/// Lower threshold for `lambda_hat_n n / tr_{>n}(Sigma)`.
pub const LOWER_BIAS_MIN: f64 = 0.5;
/// Required fraction of seeds meeting a calibrated threshold.
pub const COVERAGE: f64 = 0.95;

/// `INFLATION * q`, rounded up to two significant digits.
pub fn freeze(q: f64) -> f64 {
    let x = INFLATION * q;
    if !(x > 0.0) {
        return 0.0;
    }
    let e = x.log10().floor() as i32 - 1;
    // Divide by an exact power of ten so the result is the nearest double
    // to the two-digit decimal.
    if e >= 0 {
        (x / 10f64.powi(e)).ceil() * 10f64.powi(e)
    } else {
        (x * 10f64.powi(-e)).ceil() / 10f64.powi(-e)
    }
}

/// Frozen constant for a sample of calibration statistics.
pub fn freeze_sample(values: &[f64]) -> f64 {
    freeze(quantile(values, CALIBRATION_QUANTILE))
}

/// Spiked spectrum with two strong spikes: `(200, 100)` over a unit bulk,
/// `p = 2000`. Here `j* = 2` for `25 <= n <= 999` at `B = 2`.
pub fn strong_spiked() -> SpectrumSpec {
    SpectrumSpec::Spiked {
        spikes: vec![200.0, 100.0],
        bulk: 1.0,
        p: 2000,
    }
}

/// Spikes `(20, 10)` of the order of `tr_{>j*}(Sigma)/n`, `p = 2000`.
pub fn moderate_spiked() -> SpectrumSpec {
    SpectrumSpec::Spiked {
        spikes: vec![20.0, 10.0],
        bulk: 1.0,
        p: 2000,
    }
}

pub fn base_config(spectrum: SpectrumSpec, n: Vec<usize>, d: DGrid, f_true: FTrue, sigma: f64, replicates: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        spectrum,
        rotation_seed: None,
        law: CoefficientLaw::Gaussian,
        noise_law: CoefficientLaw::Gaussian,
        n,
        d,
        f_true,
        sigma,
        replicates,
        seed,
        constants: Constants::default(),
        oracle: true,
        min_norm: true,
        output: None,
        format: OutputFormat::Csv,
        workers: None,
    }
}

/// Polynomial decay `alpha = 2`, `p = 400`, `d = round(n^{1/3})`.
pub fn classical_config(n: Vec<usize>, replicates: usize, seed: u64) -> ExperimentConfig {
    base_config(
        SpectrumSpec::Polynomial { alpha: 2.0, p: 400 },
        n,
        DGrid::NPower(1.0 / 3.0),
        FTrue::Flat,
        1.0,
        replicates,
        seed,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibratedValue {
    pub name: &'static str,
    pub quantile: f64,
    /// Value the rule yields for this run.
    pub derived: f64,
    /// Value compiled into this module.
    pub frozen: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub values: Vec<CalibratedValue>,
}

impl CalibrationReport {
    pub fn matches_frozen(&self) -> bool {
        self.values.iter().all(|v| v.derived == v.frozen)
    }
}

fn value(name: &'static str, sample: &[f64], frozen: f64) -> CalibratedValue {
    let q = quantile(sample, CALIBRATION_QUANTILE);
    CalibratedValue {
        name,
        quantile: q,
        derived: freeze(q),
        frozen,
    }
}

/// Re-run the calibration with `replicates` draws per scenario.
pub fn calibrate(replicates: usize) -> Result<CalibrationReport> {
    let strong = base_config(strong_spiked(), vec![100], DGrid::List(vec![100]), FTrue::UnitFirst, 1.0, replicates, CALIBRATION_SEED);
    let hd = highdim_stats(&strong, 100)?;
    let upper: Vec<f64> = hd.iter().map(|s| s.upper_bias).collect();
    let cap: Vec<f64> = hd.iter().map(|s| s.cap_ratio).collect();
    let excess: Vec<f64> = hd.iter().map(|s| s.excess_ratio).collect();

    let mut risk_ratio = Vec::new();
    for spectrum in [strong_spiked(), moderate_spiked()] {
        for f in [FTrue::UnitFirst, FTrue::Flat] {
            for n in [50, 100, 200] {
                let cfg = base_config(spectrum.clone(), vec![n], DGrid::List(vec![n]), f.clone(), 1.0, replicates / 4, CALIBRATION_SEED ^ 1);
                risk_ratio.extend(highdim_stats(&cfg, n)?.iter().map(|s| s.risk_ratio));
            }
        }
    }

    let classical = classical_config(vec![200, 400, 800, 1600, 3200], 20, CALIBRATION_SEED ^ 2);
    let mut classical_ratio = Vec::new();
    let mut oracle_ratio = Vec::new();
    for &n in &classical.n {
        let stats = classical_stats(&classical, n)?;
        for (_, per_seed) in stats {
            let totals: Vec<f64> = per_seed.iter().map(|s| s.total).collect();
            let oracles: Vec<f64> = per_seed.iter().map(|s| s.oracle_total).collect();
            classical_ratio.extend(per_seed.iter().map(|s| s.total / s.bound));
            oracle_ratio.push(median(&totals) / median(&oracles));
        }
    }

    Ok(CalibrationReport {
        values: vec![
            value("upper_bias", &upper, UPPER_BIAS_K),
            value("trace_cap", &cap, TRACE_CAP_K),
            value("excess_j_star", &excess, EXCESS_J_STAR_K),
            value("highdim_ratio", &risk_ratio, HIGHDIM_RATIO_K),
            value("classical_ratio", &classical_ratio, CLASSICAL_RATIO_K),
            value("oracle_ratio", &oracle_ratio, ORACLE_RATIO_K),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freeze_rounds_up_two_digits() {
        assert_eq!(freeze(1.0), 1.3);
        assert_eq!(freeze(0.8), 1.0);
        assert_eq!(freeze(0.0), 0.0);
        assert_eq!(freeze(0.0123), 0.016);
        assert_eq!(freeze(100.0), 130.0);
    }
}
