//! PCR, oracle PCR and the minimum-norm interpolator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RegressionInstance;
use crate::spectral::{gram_matrix, sym_eigendecompose, EigenDecomposition, EmpiricalSpectrum, Route, RANK_TOL_REL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorFamily {
    Pcr,
    Oracle,
    MinNorm,
}

impl EstimatorFamily {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorFamily::Pcr => "pcr",
            EstimatorFamily::Oracle => "oracle",
            EstimatorFamily::MinNorm => "min_norm",
        }
    }
}

/// A coefficient vector in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub coefficients: DVector<f64>,
    pub family: EstimatorFamily,
    /// Truncation level; `n` for the minimum-norm interpolator.
    pub d: usize,
    /// Route of the empirical decomposition, when one was used.
    pub route: Option<Route>,
}

impl Estimate {
    /// `S_n f_hat - Y`.
    pub fn residuals(&self, design: &DMatrix<f64>, responses: &DVector<f64>) -> DVector<f64> {
        design * &self.coefficients - responses
    }
}

/// PCR in dimension `d`, decomposing the design with the shape-selected route.
pub fn pcr_fit(instance: &RegressionInstance, d: usize) -> Result<Estimate> {
    let spectrum = EmpiricalSpectrum::compute(&instance.design, Route::Auto)?;
    pcr_fit_with(instance, &spectrum, d)
}

/// PCR reusing a precomputed empirical spectrum of `instance.design`.
pub fn pcr_fit_with(instance: &RegressionInstance, spectrum: &EmpiricalSpectrum, d: usize) -> Result<Estimate> {
    let coefficients = pcr_coefficients(spectrum, &instance.responses, d)?;
    Ok(Estimate {
        coefficients,
        family: EstimatorFamily::Pcr,
        d,
        route: Some(spectrum.route()),
    })
}

/// `f_hat = n^{-1/2} sum_{j <= d} lambda_j^{-1/2} <Y, v_j> u_j`; zero for
/// `d = 0`.
pub fn pcr_coefficients(spectrum: &EmpiricalSpectrum, responses: &DVector<f64>, d: usize) -> Result<DVector<f64>> {
    let (n, p) = (spectrum.n(), spectrum.p());
    if responses.len() != n {
        return Err(Error::invalid(format!("expected {n} responses, got {}", responses.len())));
    }
    if d > n.min(p) {
        return Err(Error::invalid(format!("truncation level {d} exceeds min(n, p) = {}", n.min(p))));
    }
    spectrum.require_rank(d)?;
    if d == 0 {
        return Ok(DVector::zeros(p));
    }
    let left = spectrum.left_frame().columns(0, d);
    let scores = left.tr_mul(responses);
    let weights = DVector::from_fn(d, |j, _| scores[j] / (n as f64 * spectrum.lambda_hat(j + 1)).sqrt());
    Ok(spectrum.top_right(d)? * weights)
}

/// First `d` population eigenvectors as a `p x d` matrix.
pub(crate) fn population_frame(instance: &RegressionInstance, d: usize) -> DMatrix<f64> {
    match instance.spectrum.basis() {
        Some(q) => q.columns(0, d).into_owned(),
        None => {
            let mut u = DMatrix::zeros(instance.p(), d);
            for j in 0..d {
                u[(j, j)] = 1.0;
            }
            u
        }
    }
}

/// Lower Cholesky factor with a relative pivot guard.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    lower: DMatrix<f64>,
}

impl Cholesky {
    pub(crate) fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let m = a.nrows();
        let scale = (0..m).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
        let tol = RANK_TOL_REL * scale;
        let mut l = DMatrix::zeros(m, m);
        for j in 0..m {
            let mut pivot = a[(j, j)];
            for k in 0..j {
                pivot -= l[(j, k)] * l[(j, k)];
            }
            if !(pivot > tol) {
                return Err(Error::RankDeficient {
                    index: j + 1,
                    value: pivot,
                    tolerance: tol,
                });
            }
            let root = pivot.sqrt();
            l[(j, j)] = root;
            for i in (j + 1)..m {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / root;
            }
        }
        Ok(Self { lower: l })
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let l = &self.lower;
        let m = l.nrows();
        let mut y = b.clone();
        for i in 0..m {
            for k in 0..i {
                y[i] -= l[(i, k)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..m).rev() {
            for k in (i + 1)..m {
                y[i] -= l[(k, i)] * y[k];
            }
            y[i] /= l[(i, i)];
        }
        y
    }

    /// Diagonal of the inverse.
    pub(crate) fn inverse_diagonal(&self) -> DVector<f64> {
        let m = self.lower.nrows();
        DVector::from_fn(m, |j, _| {
            let mut e = DVector::zeros(m);
            e[j] = 1.0;
            self.solve(&e)[j]
        })
    }
}

/// Least squares on the projected covariates `P_{<=d} X_i` as normal
/// equations in the population frame.
pub(crate) struct OracleSystem {
    pub(crate) frame: DMatrix<f64>,
    pub(crate) projected: DMatrix<f64>,
    pub(crate) factor: Cholesky,
}

impl OracleSystem {
    pub(crate) fn new(instance: &RegressionInstance, d: usize) -> Result<Self> {
        let frame = population_frame(instance, d);
        let projected = &instance.design * &frame;
        let factor = Cholesky::factor(&projected.tr_mul(&projected))?;
        Ok(Self { frame, projected, factor })
    }

    /// Ambient coefficients of the least-squares fit of `y`.
    pub(crate) fn fit(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.frame * self.factor.solve(&self.projected.tr_mul(y))
    }
}

/// Oracle PCR: least squares over the span of the first `d` population
/// eigenvectors.
pub fn oracle_fit(instance: &RegressionInstance, d: usize) -> Result<Estimate> {
    if d > instance.p() {
        return Err(Error::invalid(format!("truncation level {d} exceeds p = {}", instance.p())));
    }
    let coefficients = if d == 0 {
        DVector::zeros(instance.p())
    } else {
        OracleSystem::new(instance, d)?.fit(&instance.responses)
    };
    Ok(Estimate {
        coefficients,
        family: EstimatorFamily::Oracle,
        d,
        route: None,
    })
}

/// Eigendecomposition of the Gram matrix with every eigenvalue above the
/// rank tolerance.
pub(crate) fn invertible_gram(design: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let eig = sym_eigendecompose(&gram_matrix(design)?, None)?;
    let values = eig.eigenvalues();
    let tol = RANK_TOL_REL * values[0].max(0.0);
    if let Some(j) = values.iter().position(|&v| v <= tol) {
        return Err(Error::RankDeficient {
            index: j + 1,
            value: values[j],
            tolerance: tol,
        });
    }
    Ok(eig)
}

/// `S_n^T (S_n S_n^T)^{-1} Y`, inverting the Gram matrix spectrally.
pub fn min_norm_fit(instance: &RegressionInstance) -> Result<Estimate> {
    let eig = invertible_gram(&instance.design)?;
    let n = instance.n() as f64;
    let v = eig.eigenvectors();
    let mut scores = v.tr_mul(&instance.responses);
    for (j, kappa) in eig.eigenvalues().iter().enumerate() {
        scores[j] /= n * kappa;
    }
    let coefficients = instance.design.tr_mul(&(v * scores));
    Ok(Estimate {
        coefficients,
        family: EstimatorFamily::MinNorm,
        d: instance.n(),
        route: Some(Route::Gram),
    })
}
