//! Covariance spectra, sub-Gaussian design sampling and regression instances.
//!
//! The population eigenbasis is the standard basis unless a rotation is
//! attached with [`CovarianceSpectrum::with_basis`]; all L2(P^X) norms are
//! evaluated analytically as `<g, Sigma g>`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, CompensatedSum};

/// Parametric family of a covariance spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumSpec {
    /// `lambda_j = exp(-alpha j)`.
    Exponential { alpha: f64, p: usize },
    /// `lambda_j = j^(-alpha)`.
    Polynomial { alpha: f64, p: usize },
    /// A few spikes above a flat bulk.
    Spiked { spikes: Vec<f64>, bulk: f64, p: usize },
    /// Explicit nonincreasing, nonnegative eigenvalues.
    Explicit { values: Vec<f64> },
}

impl SpectrumSpec {
    pub fn build(&self) -> Result<CovarianceSpectrum> {
        CovarianceSpectrum::build(self.clone())
    }

    pub fn family(&self) -> &'static str {
        match self {
            SpectrumSpec::Exponential { .. } => "exponential",
            SpectrumSpec::Polynomial { .. } => "polynomial",
            SpectrumSpec::Spiked { .. } => "spiked",
            SpectrumSpec::Explicit { .. } => "explicit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CovarianceSpectrum {
    spec: SpectrumSpec,
    eigenvalues: Vec<f64>,
    /// Suffix sums: `tails[d] = sum_{k > d} lambda_k` (1-based `k`).
    tails: Vec<f64>,
    tails_sq: Vec<f64>,
    /// Orthogonal matrix whose columns are the population eigenvectors.
    basis: Option<Arc<DMatrix<f64>>>,
}

impl PartialEq for CovarianceSpectrum {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.basis == other.basis
    }
}

impl CovarianceSpectrum {
    pub fn build(spec: SpectrumSpec) -> Result<Self> {
        let eigenvalues = match &spec {
            SpectrumSpec::Exponential { alpha, p } => {
                check_p(*p)?;
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::invalid(format!("exponential decay needs alpha > 0, got {alpha}")));
                }
                (1..=*p).map(|j| (-alpha * j as f64).exp()).collect::<Vec<_>>()
            }
            SpectrumSpec::Polynomial { alpha, p } => {
                check_p(*p)?;
                if !(*alpha > 1.0 && alpha.is_finite()) {
                    return Err(Error::invalid(format!("polynomial decay needs alpha > 1, got {alpha}")));
                }
                (1..=*p).map(|j| (j as f64).powf(-alpha)).collect()
            }
            SpectrumSpec::Spiked { spikes, bulk, p } => {
                check_p(*p)?;
                if !(*bulk > 0.0 && bulk.is_finite()) {
                    return Err(Error::invalid(format!("bulk eigenvalue must be positive, got {bulk}")));
                }
                if spikes.len() > *p {
                    return Err(Error::invalid(format!("{} spikes exceed dimension {p}", spikes.len())));
                }
                if spikes.windows(2).any(|w| !(w[0] >= w[1])) {
                    return Err(Error::invalid("spikes must be nonincreasing"));
                }
                if spikes.iter().any(|s| !(s > bulk) || !s.is_finite()) {
                    return Err(Error::invalid("spikes must lie strictly above the bulk"));
                }
                let mut v = spikes.clone();
                v.resize(*p, *bulk);
                v
            }
            SpectrumSpec::Explicit { values } => {
                check_p(values.len())?;
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::invalid("explicit eigenvalues must be finite and nonnegative"));
                }
                if values.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::invalid("explicit eigenvalues must be nonincreasing"));
                }
                if values[0] <= 0.0 {
                    return Err(Error::invalid("leading eigenvalue must be positive"));
                }
                values.clone()
            }
        };
        let tails = suffix_sums(eigenvalues.iter().copied());
        let tails_sq = suffix_sums(eigenvalues.iter().map(|v| v * v));
        Ok(Self {
            spec,
            eigenvalues,
            tails,
            tails_sq,
            basis: None,
        })
    }

    pub fn exponential(alpha: f64, p: usize) -> Result<Self> {
        Self::build(SpectrumSpec::Exponential { alpha, p })
    }

    pub fn polynomial(alpha: f64, p: usize) -> Result<Self> {
        Self::build(SpectrumSpec::Polynomial { alpha, p })
    }

    pub fn spiked(spikes: &[f64], bulk: f64, p: usize) -> Result<Self> {
        Self::build(SpectrumSpec::Spiked {
            spikes: spikes.to_vec(),
            bulk,
            p,
        })
    }

    pub fn explicit(values: &[f64]) -> Result<Self> {
        Self::build(SpectrumSpec::Explicit {
            values: values.to_vec(),
        })
    }

    /// Attaches a population eigenbasis (orthogonal `p x p`, eigenvectors as
    /// columns).
    pub fn with_basis(mut self, basis: DMatrix<f64>) -> Result<Self> {
        let p = self.p();
        if basis.shape() != (p, p) {
            return Err(Error::invalid(format!("basis must be {p}x{p}")));
        }
        let defect = crate::spectral::max_abs_diff_identity(&basis.tr_mul(&basis));
        if defect > 1e-10 {
            return Err(Error::invalid(format!("basis is not orthogonal (defect {defect:e})")));
        }
        self.basis = Some(Arc::new(basis));
        Ok(self)
    }

    /// Same spectrum with a Haar-random population eigenbasis.
    pub fn with_random_rotation(self, seed: u64) -> Result<Self> {
        let q = random_orthogonal(self.p(), seed);
        self.with_basis(q)
    }

    pub fn spec(&self) -> &SpectrumSpec {
        &self.spec
    }

    pub fn p(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `lambda_j` for 1-based `j`; zero beyond `p`.
    pub fn lambda(&self, j: usize) -> f64 {
        assert!(j >= 1, "eigenvalue index is 1-based");
        self.eigenvalues.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.tails[0]
    }

    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        self.basis.as_deref()
    }

    /// `tr_{>d}(Sigma^power)` for `power` 1 or 2.
    pub fn tail_trace(&self, d: usize, power: u32) -> Result<f64> {
        if d > self.p() {
            return Err(Error::invalid(format!("tail index {d} exceeds dimension {}", self.p())));
        }
        match power {
            1 => Ok(self.tails[d]),
            2 => Ok(self.tails_sq[d]),
            _ => Err(Error::invalid(format!("tail trace power must be 1 or 2, got {power}"))),
        }
    }

    pub(crate) fn tail(&self, d: usize) -> f64 {
        self.tails[d.min(self.p())]
    }

    pub(crate) fn tail_sq(&self, d: usize) -> f64 {
        self.tails_sq[d.min(self.p())]
    }

    /// Analytic `tr_{>p}` of the untruncated family (geometric tail for
    /// exponential decay, integral bound for polynomial decay).
    pub fn truncation_tail(&self) -> f64 {
        match &self.spec {
            SpectrumSpec::Exponential { alpha, p } => (-alpha * (*p as f64 + 1.0)).exp() / (1.0 - (-alpha).exp()),
            SpectrumSpec::Polynomial { alpha, p } => (*p as f64).powf(1.0 - alpha) / (alpha - 1.0),
            _ => 0.0,
        }
    }

    /// Coordinates of `g` in the population eigenbasis.
    pub fn to_eigen_coords(&self, g: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(q) => q.tr_mul(g),
            None => g.clone(),
        }
    }

    /// Columns of `m` expressed in the population eigenbasis.
    pub fn to_eigen_coords_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.basis {
            Some(q) => q.tr_mul(m),
            None => m.clone(),
        }
    }

    /// Ambient vector from population-eigenbasis coordinates.
    pub fn from_eigen_coords(&self, c: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(q) => q.as_ref() * c,
            None => c.clone(),
        }
    }

    /// `||g||^2_{L2(P^X)} = <g, Sigma g>`.
    pub fn l2_norm_sq(&self, g: &DVector<f64>) -> f64 {
        let c = self.to_eigen_coords(g);
        numeric::sum(c.iter().zip(&self.eigenvalues).map(|(x, l)| l * x * x))
    }

    /// Dense `Sigma`.
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let diag = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        match &self.basis {
            Some(q) => q.as_ref() * diag * q.transpose(),
            None => diag,
        }
    }
}

/// Largest ambient dimension a spectrum may have. Keeps a hostile config
/// from requesting an unbounded allocation.
pub const MAX_DIMENSION: usize = 1 << 20;

fn check_p(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::invalid("ambient dimension must be positive"));
    }
    if p > MAX_DIMENSION {
        return Err(Error::invalid(format!("ambient dimension {p} exceeds {MAX_DIMENSION}")));
    }
    Ok(())
}

/// `out[d] = sum_{k >= d} x_k` (0-based `k`), accumulated from the smallest
/// terms upward; `out[len] = 0`.
fn suffix_sums(values: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator) -> Vec<f64> {
    let len = values.len();
    let mut out = vec![0.0; len + 1];
    let mut acc = CompensatedSum::new();
    for (i, v) in values.rev().enumerate() {
        acc.add(v);
        out[len - 1 - i] = acc.value();
    }
    out
}

/// Standardized law of the Karhunen-Loeve coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientLaw {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[-sqrt 3, sqrt 3]`.
    Uniform,
}

impl CoefficientLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CoefficientLaw::Gaussian => rng.sample(StandardNormal),
            CoefficientLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CoefficientLaw::Uniform => {
                let s = 3f64.sqrt();
                rng.random_range(-s..s)
            }
        }
    }

    /// Upper bound on the Orlicz psi_2 norm of one standardized coefficient:
    /// exact for Gaussian (`sqrt(8/3)`) and Rademacher (`1/sqrt(ln 2)`), and
    /// the bounded-variable bound `sqrt(3)/sqrt(ln 2)` for the uniform law.
    pub fn psi2_bound(&self) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        match self {
            CoefficientLaw::Gaussian => (8.0f64 / 3.0).sqrt(),
            CoefficientLaw::Rademacher => 1.0 / ln2.sqrt(),
            CoefficientLaw::Uniform => 3f64.sqrt() / ln2.sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoefficientLaw::Gaussian => "gaussian",
            CoefficientLaw::Rademacher => "rademacher",
            CoefficientLaw::Uniform => "uniform",
        }
    }
}

const DESIGN_TAG: u64 = 0x4445_5349_474e; // "DESIGN"
const NOISE_TAG: u64 = 0x4e_4f49_5345; // "NOISE"
const ROTATION_TAG: u64 = 0x524f_5441_5445; // "ROTATE"

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines two 64-bit values into a seed: `splitmix64(a ^ splitmix64(b))`.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of one replicate: `mix_seed(base_seed, replicate)`.
pub fn replicate_seed(base_seed: u64, replicate: u64) -> u64 {
    mix_seed(base_seed, replicate)
}

/// Independent ChaCha8 stream for `(seed, purpose tag, index)`.
fn stream_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, tag));
    rng.set_stream(index);
    rng
}

/// Whitened coefficients `eta` as an `n x p` matrix; row `i` comes from its
/// own stream, so any row can be regenerated alone.
pub fn sample_coefficients(law: CoefficientLaw, n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut buf = Vec::with_capacity(n * p);
    for i in 0..n {
        let mut rng = stream_rng(seed, DESIGN_TAG, i as u64);
        buf.extend((0..p).map(|_| law.sample(&mut rng)));
    }
    DMatrix::from_row_slice(n, p, &buf)
}

/// Karhunen-Loeve sampling: `X_i = sum_j lambda_j^{1/2} eta_{ji} u_j`.
pub fn sample_design(spectrum: &CovarianceSpectrum, law: CoefficientLaw, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::invalid("sample size must be positive"));
    }
    let mut x = sample_coefficients(law, n, spectrum.p(), seed);
    for (j, lam) in spectrum.eigenvalues().iter().enumerate() {
        x.column_mut(j).scale_mut(lam.sqrt());
    }
    Ok(match spectrum.basis() {
        Some(q) => x * q.transpose(),
        None => x,
    })
}

/// Haar-distributed orthogonal matrix from the QR factorization of a
/// Gaussian matrix with sign-corrected `R`.
pub fn random_orthogonal(p: usize, seed: u64) -> DMatrix<f64> {
    let g = sample_coefficients(CoefficientLaw::Gaussian, p, p, mix_seed(seed, ROTATION_TAG));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Draws `Y = <f, X> + eps` together with the noise used.
#[derive(Debug, Clone)]
pub struct RegressionInstance {
    pub design: DMatrix<f64>,
    pub responses: DVector<f64>,
    pub f_true: DVector<f64>,
    pub sigma: f64,
    pub noise: DVector<f64>,
    pub spectrum: CovarianceSpectrum,
    pub law: CoefficientLaw,
    pub noise_law: CoefficientLaw,
    pub rng_seed: u64,
}

impl RegressionInstance {
    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    /// Same design and signal, noise redrawn from `noise_seed`.
    pub fn with_fresh_noise(&self, noise_seed: u64) -> RegressionInstance {
        let noise = sample_noise(self.noise_law, self.sigma, self.n(), noise_seed);
        let responses = &self.design * &self.f_true + &noise;
        RegressionInstance {
            responses,
            noise,
            rng_seed: noise_seed,
            ..self.clone()
        }
    }

    /// Same design and signal with explicit responses (noise set to the
    /// residual `Y - X f`).
    pub fn with_responses(&self, responses: DVector<f64>) -> Result<RegressionInstance> {
        if responses.len() != self.n() {
            return Err(Error::invalid("response length mismatch"));
        }
        let noise = &responses - &self.design * &self.f_true;
        Ok(RegressionInstance {
            responses,
            noise,
            ..self.clone()
        })
    }
}

fn sample_noise(law: CoefficientLaw, sigma: f64, n: usize, seed: u64) -> DVector<f64> {
    let mut rng = stream_rng(seed, NOISE_TAG, 0);
    DVector::from_fn(n, |_, _| sigma * law.sample(&mut rng))
}

/// Instance with Gaussian noise.
pub fn make_instance(
    spectrum: &CovarianceSpectrum,
    law: CoefficientLaw,
    n: usize,
    f_true: &DVector<f64>,
    sigma: f64,
    seed: u64,
) -> Result<RegressionInstance> {
    make_instance_with_noise(spectrum, law, n, f_true, sigma, CoefficientLaw::Gaussian, seed)
}

/// Instance with a chosen (standardized) noise law scaled by `sigma`.
pub fn make_instance_with_noise(
    spectrum: &CovarianceSpectrum,
    law: CoefficientLaw,
    n: usize,
    f_true: &DVector<f64>,
    sigma: f64,
    noise_law: CoefficientLaw,
    seed: u64,
) -> Result<RegressionInstance> {
    if f_true.len() != spectrum.p() {
        return Err(Error::invalid(format!(
            "f_true has length {}, spectrum dimension is {}",
            f_true.len(),
            spectrum.p()
        )));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if f_true.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("f_true has non-finite entries"));
    }
    let design = sample_design(spectrum, law, n, seed)?;
    let noise = sample_noise(noise_law, sigma, n, seed);
    let responses = &design * f_true + &noise;
    Ok(RegressionInstance {
        design,
        responses,
        f_true: f_true.clone(),
        sigma,
        noise,
        spectrum: spectrum.clone(),
        law,
        noise_law,
        rng_seed: seed,
    })
}
