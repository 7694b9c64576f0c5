//! Experiment configuration: one TOML document per experiment.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoefficientLaw, CovarianceSpectrum, SpectrumSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Number of log-spaced levels (besides `d = 0`) in an `"auto"` grid.
const AUTO_LEVELS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" | "jsonl" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format {other:?} (expected csv or json)"))),
        }
    }
}

/// Truncation levels to sweep at each sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DGridRepr", into = "DGridRepr")]
pub enum DGrid {
    /// `0..=min(n, p)`.
    All,
    /// `0` plus log-spaced levels up to `min(n, p)`.
    Auto,
    List(Vec<usize>),
    /// `round(n^x)`, clamped to `[1, min(n, p)]`.
    NPower(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DGridRepr {
    Keyword(String),
    List(Vec<usize>),
    Power { n_power: f64 },
}

impl TryFrom<DGridRepr> for DGrid {
    type Error = String;

    fn try_from(r: DGridRepr) -> std::result::Result<Self, String> {
        match r {
            DGridRepr::Keyword(k) => match k.as_str() {
                "all" => Ok(DGrid::All),
                "auto" => Ok(DGrid::Auto),
                other => Err(format!("unknown d grid keyword {other:?}")),
            },
            DGridRepr::List(v) => Ok(DGrid::List(v)),
            DGridRepr::Power { n_power } => Ok(DGrid::NPower(n_power)),
        }
    }
}

impl From<DGrid> for DGridRepr {
    fn from(g: DGrid) -> Self {
        match g {
            DGrid::All => DGridRepr::Keyword("all".into()),
            DGrid::Auto => DGridRepr::Keyword("auto".into()),
            DGrid::List(v) => DGridRepr::List(v),
            DGrid::NPower(x) => DGridRepr::Power { n_power: x },
        }
    }
}

impl DGrid {
    /// Sorted, deduplicated levels for sample size `n` and dimension `p`.
    /// Listed levels are kept even when out of range.
    pub fn levels(&self, n: usize, p: usize) -> Vec<usize> {
        let m = n.min(p);
        let mut out = match self {
            DGrid::All => (0..=m).collect(),
            DGrid::Auto => {
                let mut v = vec![0];
                if m >= 1 {
                    let top = (m as f64).ln();
                    v.extend((0..AUTO_LEVELS).map(|i| (top * i as f64 / (AUTO_LEVELS - 1) as f64).exp().round() as usize));
                }
                v
            }
            DGrid::List(v) => v.clone(),
            DGrid::NPower(x) => vec![((n as f64).powf(*x).round() as usize).clamp(1, m.max(1))],
        };
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Regression function specification.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "FTrueRepr", into = "FTrueRepr")]
pub enum FTrue {
    /// `p^{-1/2} (1, ..., 1)` in the ambient basis.
    #[default]
    Flat,
    /// The leading population eigenvector.
    UnitFirst,
    Explicit(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FTrueRepr {
    Keyword(String),
    Explicit { explicit: Vec<f64> },
}

impl TryFrom<FTrueRepr> for FTrue {
    type Error = String;

    fn try_from(r: FTrueRepr) -> std::result::Result<Self, String> {
        match r {
            FTrueRepr::Keyword(k) => match k.as_str() {
                "flat" => Ok(FTrue::Flat),
                "unit_first" => Ok(FTrue::UnitFirst),
                other => Err(format!("unknown f_true keyword {other:?}")),
            },
            FTrueRepr::Explicit { explicit } => Ok(FTrue::Explicit(explicit)),
        }
    }
}

impl From<FTrue> for FTrueRepr {
    fn from(f: FTrue) -> Self {
        match f {
            FTrue::Flat => FTrueRepr::Keyword("flat".into()),
            FTrue::UnitFirst => FTrueRepr::Keyword("unit_first".into()),
            FTrue::Explicit(v) => FTrueRepr::Explicit { explicit: v },
        }
    }
}

impl FTrue {
    pub fn vector(&self, spectrum: &CovarianceSpectrum) -> Result<DVector<f64>> {
        let p = spectrum.p();
        match self {
            FTrue::Flat => Ok(DVector::from_element(p, 1.0 / (p as f64).sqrt())),
            FTrue::UnitFirst => {
                let mut e = DVector::zeros(p);
                e[0] = 1.0;
                Ok(spectrum.from_eigen_coords(&e))
            }
            FTrue::Explicit(v) => {
                if v.len() != p {
                    return Err(Error::Config(format!("f_true has length {}, spectrum dimension is {p}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Config("f_true has non-finite entries".into()));
                }
                Ok(DVector::from_column_slice(v))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    /// Effective-rank threshold multiplier in `j*`.
    #[serde(rename = "B", default = "default_b")]
    pub b: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_t")]
    pub t: f64,
}

fn default_b() -> f64 {
    2.0
}
fn default_c1() -> f64 {
    0.25
}
fn default_t() -> f64 {
    2.0
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            b: default_b(),
            c1: default_c1(),
            t: default_t(),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub spectrum: SpectrumSpec,
    /// Rotate the population eigenbasis by a Haar-random orthogonal matrix.
    #[serde(default)]
    pub rotation_seed: Option<u64>,
    #[serde(default)]
    pub law: CoefficientLaw,
    #[serde(default)]
    pub noise_law: CoefficientLaw,
    pub n: Vec<usize>,
    pub d: DGrid,
    #[serde(default)]
    pub f_true: FTrue,
    pub sigma: f64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default = "default_true")]
    pub oracle: bool,
    #[serde(default = "default_true")]
    pub min_norm: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.n.is_empty() {
            return fail("n grid is empty".into());
        }
        if self.n.contains(&0) {
            return fail("sample sizes must be positive".into());
        }
        match &self.d {
            DGrid::List(v) if v.is_empty() => return fail("d grid is empty".into()),
            DGrid::NPower(x) if !(*x > 0.0 && *x <= 1.0) => return fail(format!("n_power must lie in (0, 1], got {x}")),
            _ => {}
        }
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        let c = self.constants;
        if !(c.b > 1.0 && c.b.is_finite()) {
            return fail(format!("constants.B must exceed 1, got {}", c.b));
        }
        if !(c.c1 > 0.0 && c.c1.is_finite()) {
            return fail(format!("constants.c1 must be positive, got {}", c.c1));
        }
        if !(c.t >= 1.0 && c.t.is_finite()) {
            return fail(format!("constants.t must be >= 1, got {}", c.t));
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        let spectrum = self.spectrum.build().map_err(|e| Error::Config(format!("spectrum: {e}")))?;
        self.f_true.vector(&spectrum)?;
        Ok(())
    }

    /// Population spectrum including the optional rotation.
    pub fn build_spectrum(&self) -> Result<CovarianceSpectrum> {
        let s = self.spectrum.build()?;
        match self.rotation_seed {
            Some(seed) => s.with_random_rotation(seed),
            None => Ok(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
schema_version = 1
n = [20, 40]
d = [1, 3]
sigma = 0.5
replicates = 2
seed = 9

[spectrum]
kind = "polynomial"
alpha = 2.0
p = 30
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.f_true, FTrue::Flat);
        assert_eq!(cfg.law, CoefficientLaw::Gaussian);
        assert_eq!(cfg.constants, Constants::default());
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert!(cfg.oracle && cfg.min_norm);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn grid_variants() {
        for (text, expected) in [
            ("\"all\"", DGrid::All),
            ("\"auto\"", DGrid::Auto),
            ("{ n_power = 0.5 }", DGrid::NPower(0.5)),
            ("[0, 2]", DGrid::List(vec![0, 2])),
        ] {
            let doc = BASIC.replace("d = [1, 3]", &format!("d = {text}"));
            assert_eq!(ExperimentConfig::from_toml_str(&doc).unwrap().d, expected);
        }
        assert_eq!(DGrid::All.levels(3, 10), vec![0, 1, 2, 3]);
        assert_eq!(DGrid::NPower(0.5).levels(100, 1000), vec![10]);
        let auto = DGrid::Auto.levels(100, 1000);
        assert_eq!((auto[0], auto[1], *auto.last().unwrap()), (0, 1, 100));
        assert_eq!(DGrid::List(vec![5, 1, 5]).levels(2, 2), vec![1, 5]);
    }

    #[test]
    fn rejects_bad_documents() {
        let cases = [
            BASIC.replace("schema_version = 1", "schema_version = 2"),
            BASIC.replace("n = [20, 40]", "n = []"),
            BASIC.replace("d = [1, 3]", "d = []"),
            BASIC.replace("d = [1, 3]", "d = \"most\""),
            BASIC.replace("replicates = 2", "replicates = 0"),
            BASIC.replace("sigma = 0.5", "sigma = -1.0"),
            BASIC.replace("alpha = 2.0", "alpha = 0.5"),
            BASIC.replace("seed = 9", "seed = 9\nbogus = 1"),
            format!("{BASIC}\n[constants]\nB = 1.0\n"),
            BASIC.replace("sigma = 0.5", "sigma = 0.5\nf_true = { explicit = [1.0] }"),
        ];
        for doc in cases {
            assert!(matches!(ExperimentConfig::from_toml_str(&doc), Err(Error::Config(_))), "{doc}");
        }
    }

    #[test]
    fn f_true_vectors() {
        let spec = CovarianceSpectrum::polynomial(2.0, 4).unwrap();
        assert!((FTrue::Flat.vector(&spec).unwrap().norm() - 1.0).abs() < 1e-15);
        assert_eq!(FTrue::UnitFirst.vector(&spec).unwrap()[0], 1.0);
        let rotated = spec.with_random_rotation(3).unwrap();
        let u1 = FTrue::UnitFirst.vector(&rotated).unwrap();
        assert!((rotated.l2_norm_sq(&u1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_file_reports_path() {
        let err = ExperimentConfig::from_path(Path::new("/nonexistent/x.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.toml"));
    }
}
