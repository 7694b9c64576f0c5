//! Principal component regression under high-dimensional covariance
//! spectra: spectral routines, data model, estimators, exact risk
//! functionals and an experiment harness.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod model;
pub mod numeric;
pub mod risk;
pub mod spectral;

pub use error::{Error, Result};
pub use estimators::{min_norm_fit, oracle_fit, pcr_fit, pcr_fit_with, Estimate, EstimatorFamily};
pub use model::{make_instance, CoefficientLaw, CovarianceSpectrum, RegressionInstance, SpectrumSpec};
pub use spectral::{EmpiricalSpectrum, Route, SymMatrix};
