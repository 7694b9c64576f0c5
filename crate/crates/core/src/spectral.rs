//! Dense symmetric eigendecomposition and the sampling-operator SVD.
//!
//! Designs are `n x p` matrices whose rows are the observations `X_i`. The
//! empirical covariance is `X^T X / n` and the normalized Gram matrix is
//! `X X^T / n`; their positive spectra coincide, so for `p > 2n` the
//! decomposition is carried out on the `n x n` Gram matrix and the right
//! singular frame is recovered by back-projection.
//!
//! The eigensolver is Householder tridiagonalization followed by implicit QL
//! with Wilkinson-style shifts. Output is sorted nonincreasing with a fixed
//! sign gauge (largest-magnitude entry of every vector is positive), so equal
//! inputs give bitwise-equal outputs.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative rank tolerance: eigenvalues at or below `RANK_TOL_REL * lambda_1`
/// are treated as zero for singular-vector recovery and pseudo-inversion.
pub const RANK_TOL_REL: f64 = 1e-10;

/// QL iterations allowed per matrix dimension before giving up.
const ITERATIONS_PER_DIM: usize = 64;

/// A dense symmetric matrix; symmetry is exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Wraps a square matrix, averaging it with its transpose.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::invalid("symmetric matrix must have positive dimension"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let dim = m.nrows();
        let mut data = m;
        for j in 0..dim {
            for i in (j + 1)..dim {
                let avg = 0.5 * (data[(i, j)] + data[(j, i)]);
                data[(i, j)] = avg;
                data[(j, i)] = avg;
            }
        }
        Ok(Self { data })
    }

    /// Builds from the lower triangle of `m`, mirroring it into the upper one.
    fn from_lower(mut m: DMatrix<f64>) -> Self {
        let dim = m.nrows();
        for j in 0..dim {
            for i in (j + 1)..dim {
                m[(j, i)] = m[(i, j)];
            }
        }
        Self { data: m }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        crate::numeric::sum(self.data.diagonal().iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }
}

/// Eigenpairs sorted by nonincreasing eigenvalue; eigenvectors are columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub(crate) fn from_parts(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Self {
        debug_assert_eq!(eigenvalues.len(), eigenvectors.ncols());
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// Orthogonal projector onto the span of the first `d` eigenvectors.
    pub fn projector(&self, d: usize) -> DMatrix<f64> {
        let u = self.eigenvectors.columns(0, d.min(self.len()));
        u * u.transpose()
    }

    /// `U diag(lambda) U^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (j, lam) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*lam);
        }
        scaled * self.eigenvectors.transpose()
    }

    /// `max |U^T U - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.eigenvectors.tr_mul(&self.eigenvectors);
        max_abs_diff_identity(&gram)
    }
}

pub(crate) fn max_abs_diff_identity(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).abs());
        }
    }
    worst
}

/// Top-`k` eigenpairs of `a` (all of them when `k` is `None`).
pub fn sym_eigendecompose(a: &SymMatrix, k: Option<usize>) -> Result<EigenDecomposition> {
    let dim = a.dim();
    let k = k.unwrap_or(dim);
    if k == 0 || k > dim {
        return Err(Error::invalid(format!("requested {k} eigenpairs of a {dim}x{dim} matrix")));
    }
    let (values, vectors) = tridiagonal_ql(a, true)?;
    let vectors = vectors.expect("vectors requested");
    let order = descending_order(&values);

    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = DMatrix::zeros(dim, k);
    for (col, &src) in order.iter().take(k).enumerate() {
        eigenvalues.push(values[src]);
        // `vectors` holds eigenvectors as contiguous rows.
        let row = &vectors[src * dim..(src + 1) * dim];
        let sign = gauge_sign(row);
        for (i, x) in row.iter().enumerate() {
            eigenvectors[(i, col)] = sign * x;
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// All eigenvalues of `a`, nonincreasing, without forming eigenvectors.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    let (mut values, _) = tridiagonal_ql(a, false)?;
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    order
}

fn gauge_sign(v: &[f64]) -> f64 {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            sign = if x < 0.0 { -1.0 } else { 1.0 };
        }
    }
    sign
}

/// Returns unsorted eigenvalues and, if requested, eigenvectors stored as
/// consecutive rows of a `dim * dim` buffer.
fn tridiagonal_ql(a: &SymMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = a.dim();
    // Row-major working copy.
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            z[i * n + j] = a.get(i, j);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut z, n, &mut d, &mut e, want_vectors);

    // Transpose so that each eigenvector is a contiguous row during QL.
    let mut rows = if want_vectors {
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = z[i * n + j];
            }
        }
        Some(t)
    } else {
        None
    };
    drop(z);

    let cap = ITERATIONS_PER_DIM * n;
    if let Err(iterations) = implicit_ql(&mut d, &mut e, rows.as_deref_mut(), n, cap) {
        let residual = match &rows {
            Some(r) => eigen_residual(a, &d, r),
            None => e.iter().map(|x| x * x).sum::<f64>().sqrt(),
        };
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok((d, rows))
}

/// Frobenius norm of `A U - U diag(d)` with eigenvectors stored as rows.
fn eigen_residual(a: &SymMatrix, d: &[f64], rows: &[f64]) -> f64 {
    let n = d.len();
    let mut total = 0.0;
    for j in 0..n {
        let v = &rows[j * n..(j + 1) * n];
        for i in 0..n {
            let av: f64 = (0..n).map(|k| a.get(i, k) * v[k]).sum();
            let r = av - d[j] * v[i];
            total += r * r;
        }
    }
    total.sqrt()
}

/// Householder reduction to tridiagonal form. On exit `d` holds the
/// diagonal, `e[1..]` the subdiagonal and, with `want_vectors`, `z` the
/// accumulated orthogonal transform (eigenvector coordinates in columns).
fn householder_tridiagonalize(z: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], want_vectors: bool) {
    let idx = |i: usize, j: usize| i * n + j;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..i).map(|k| z[idx(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = z[idx(i, l)];
            } else {
                for k in 0..i {
                    z[idx(i, k)] /= scale;
                    h += z[idx(i, k)] * z[idx(i, k)];
                }
                let f = z[idx(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[idx(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..i {
                    if want_vectors {
                        z[idx(j, i)] = z[idx(i, j)] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[idx(j, k)] * z[idx(i, k)];
                    }
                    for k in (j + 1)..i {
                        g += z[idx(k, j)] * z[idx(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * z[idx(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    let f = z[idx(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[idx(j, k)] -= f * e[k] + g * z[idx(i, k)];
                    }
                }
            }
        } else {
            e[i] = z[idx(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if want_vectors {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += z[idx(i, k)] * z[idx(k, j)];
                    }
                    for k in 0..i {
                        z[idx(k, j)] -= g * z[idx(k, i)];
                    }
                }
            }
            d[i] = z[idx(i, i)];
            z[idx(i, i)] = 1.0;
            for j in 0..i {
                z[idx(j, i)] = 0.0;
                z[idx(i, j)] = 0.0;
            }
        } else {
            d[i] = z[idx(i, i)];
        }
    }
}

/// Implicit QL on the tridiagonal `(d, e)`; rotations are applied to the rows
/// of `rows` when present. Returns the total iteration count on failure.
fn implicit_ql(d: &mut [f64], e: &mut [f64], mut rows: Option<&mut [f64]>, n: usize, cap: usize) -> std::result::Result<(), usize> {
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut total_iterations = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            total_iterations += 1;
            if total_iterations > cap {
                return Err(total_iterations);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut early_exit = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early_exit = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = rows.as_deref_mut() {
                    let (head, tail) = z.split_at_mut((i + 1) * n);
                    let zi = &mut head[i * n..];
                    let zi1 = &mut tail[..n];
                    for k in 0..n {
                        let f = zi1[k];
                        zi1[k] = s * zi[k] + c * f;
                        zi[k] = c * zi[k] - s * f;
                    }
                }
            }
            if early_exit {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn validate_design(design: &DMatrix<f64>) -> Result<()> {
    if design.nrows() == 0 || design.ncols() == 0 {
        return Err(Error::invalid(format!(
            "design must be nonempty, got {}x{}",
            design.nrows(),
            design.ncols()
        )));
    }
    if design.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("design has non-finite entries"));
    }
    Ok(())
}

/// `n^{-1} sum_i X_i X_i^T`, a `p x p` matrix.
pub fn empirical_covariance(design: &DMatrix<f64>) -> Result<SymMatrix> {
    validate_design(design)?;
    let n = design.nrows() as f64;
    let mut m = design.tr_mul(design);
    m /= n;
    Ok(SymMatrix::from_lower(m))
}

/// `n^{-1} (<X_i, X_i'>)`, an `n x n` matrix.
pub fn gram_matrix(design: &DMatrix<f64>) -> Result<SymMatrix> {
    validate_design(design)?;
    let n = design.nrows() as f64;
    let mut m = design * design.transpose();
    m /= n;
    Ok(SymMatrix::from_lower(m))
}

fn rank_tolerance(lambda_max: f64) -> f64 {
    RANK_TOL_REL * lambda_max.max(0.0)
}

/// Top eigenpairs of the empirical covariance computed through the Gram
/// matrix. All `min(n, p)` eigenvalues are returned; eigenvectors are
/// recovered for the first `k` (default: all of them) and every one of those
/// must exceed the rank tolerance.
pub fn spectrum_via_gram(design: &DMatrix<f64>, k: Option<usize>) -> Result<EigenDecomposition> {
    let (values, vectors, _) = gram_route(design, k)?;
    Ok(EigenDecomposition::from_parts(values, vectors))
}

/// Shared Gram route: (eigenvalues of the covariance, recovered right
/// vectors, left vectors actually used).
fn gram_route(design: &DMatrix<f64>, k: Option<usize>) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (n, p) = design.shape();
    let m = n.min(p);
    let k = k.unwrap_or(m);
    if k > m {
        return Err(Error::invalid(format!("requested {k} eigenvectors but only {m} are available")));
    }
    let gram = gram_matrix(design)?;
    let eig = sym_eigendecompose(&gram, None)?;
    let values: Vec<f64> = eig.eigenvalues()[..m].to_vec();
    let tol = rank_tolerance(values[0]);
    if let Some(j) = (0..k).find(|&j| values[j] <= tol) {
        return Err(Error::RankDeficient {
            index: j + 1,
            value: values[j],
            tolerance: tol,
        });
    }
    let left = eig.eigenvectors().columns(0, k).into_owned();
    let right = recover_right(design, &left, &values[..k]);
    Ok((values, right, left))
}

/// `u_j = (n lambda_j)^{-1/2} X^T v_j`.
fn recover_right(design: &DMatrix<f64>, left: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let n = design.nrows() as f64;
    let mut right = design.tr_mul(left);
    for (j, lam) in values.iter().enumerate() {
        right.column_mut(j).scale_mut(1.0 / (n * lam).sqrt());
    }
    right
}

/// `v_j = (n lambda_j)^{-1/2} X u_j`.
fn recover_left(design: &DMatrix<f64>, right: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
    let n = design.nrows() as f64;
    let mut left = design * right;
    for (j, lam) in values.iter().enumerate() {
        left.column_mut(j).scale_mut(1.0 / (n * lam).sqrt());
    }
    left
}

/// Which eigenproblem to solve for the empirical spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Decompose the `p x p` empirical covariance.
    Direct,
    /// Decompose the `n x n` Gram matrix.
    Gram,
    /// Gram when `p > 2n`, direct otherwise.
    Auto,
}

impl Route {
    pub fn resolve(self, n: usize, p: usize) -> Route {
        match self {
            Route::Auto if p > 2 * n => Route::Gram,
            Route::Auto => Route::Direct,
            other => other,
        }
    }
}

/// Singular value decomposition of `n^{-1/2} S_n` restricted to its numerical
/// rank: `n^{-1/2} X = sum_j s_j v_j u_j^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSvd {
    pub singular_values: Vec<f64>,
    /// `n x r`, orthonormal columns.
    pub left_frame: DMatrix<f64>,
    /// `p x r`, orthonormal columns.
    pub right_frame: DMatrix<f64>,
}

impl SamplingSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `sum_j s_j v_j u_j^T`, to compare against `n^{-1/2} X`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left_frame.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right_frame.transpose()
    }
}

/// Empirical eigenvalues with as many eigenvectors and left singular vectors
/// as the chosen route yields.
///
/// The direct route provides all `p` eigenvectors of the empirical
/// covariance; the Gram route provides only those above the rank tolerance.
/// Left singular vectors exist exactly for the eigenvalues above it.
#[derive(Debug, Clone)]
pub struct EmpiricalSpectrum {
    n: usize,
    eigenvalues: Vec<f64>,
    right: DMatrix<f64>,
    left: DMatrix<f64>,
    rank: usize,
    rank_tol: f64,
    route: Route,
}

impl EmpiricalSpectrum {
    pub fn compute(design: &DMatrix<f64>, route: Route) -> Result<Self> {
        validate_design(design)?;
        let (n, p) = design.shape();
        match route.resolve(n, p) {
            Route::Gram => {
                let gram = gram_matrix(design)?;
                let eig = sym_eigendecompose(&gram, None)?;
                let m = n.min(p);
                let values = eig.eigenvalues()[..m].to_vec();
                let rank_tol = rank_tolerance(values[0]);
                let rank = values.iter().take_while(|&&v| v > rank_tol).count();
                let left = eig.eigenvectors().columns(0, rank).into_owned();
                let right = recover_right(design, &left, &values[..rank]);
                Ok(Self {
                    n,
                    eigenvalues: values,
                    right,
                    left,
                    rank,
                    rank_tol,
                    route: Route::Gram,
                })
            }
            _ => {
                let cov = empirical_covariance(design)?;
                let eig = sym_eigendecompose(&cov, None)?;
                let values = eig.eigenvalues().to_vec();
                let rank_tol = rank_tolerance(values[0]);
                let rank = values.iter().take_while(|&&v| v > rank_tol).count().min(n);
                let right = eig.eigenvectors().clone();
                let left = recover_left(design, &right.columns(0, rank).into_owned(), &values[..rank]);
                Ok(Self {
                    n,
                    eigenvalues: values,
                    right,
                    left,
                    rank,
                    rank_tol,
                    route: Route::Direct,
                })
            }
        }
    }

    /// Builds a spectrum from explicit parts; used to inject alternative
    /// eigenbases (sign flips, rotations inside degenerate blocks).
    pub fn from_parts(n: usize, eigenvalues: Vec<f64>, right: DMatrix<f64>, left: DMatrix<f64>, route: Route) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid("empty spectrum"));
        }
        if left.ncols() > right.ncols() || left.nrows() != n {
            return Err(Error::invalid("inconsistent frame shapes"));
        }
        let rank_tol = rank_tolerance(eigenvalues[0]);
        let rank = eigenvalues.iter().take_while(|&&v| v > rank_tol).count().min(left.ncols());
        Ok(Self {
            n,
            eigenvalues,
            right,
            left,
            rank,
            rank_tol,
            route,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.right.nrows()
    }

    pub fn route(&self) -> Route {
        self.route
    }

    /// Empirical eigenvalues, nonincreasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `lambda_hat_j` for 1-based `j`, zero beyond the computed list.
    pub fn lambda_hat(&self, j: usize) -> f64 {
        assert!(j >= 1, "eigenvalue index is 1-based");
        self.eigenvalues.get(j - 1).copied().unwrap_or(0.0)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Number of right eigenvectors available.
    pub fn available_vectors(&self) -> usize {
        self.right.ncols()
    }

    pub fn right_frame(&self) -> &DMatrix<f64> {
        &self.right
    }

    pub fn left_frame(&self) -> &DMatrix<f64> {
        &self.left
    }

    /// The first `d` eigenvectors as a `p x d` matrix.
    pub fn top_right(&self, d: usize) -> Result<nalgebra::DMatrixView<'_, f64>> {
        if d > self.right.ncols() {
            return Err(Error::invalid(format!(
                "{d} empirical eigenvectors requested, {} available",
                self.right.ncols()
            )));
        }
        Ok(self.right.columns(0, d))
    }

    /// Fails with the first index `j <= d` whose eigenvalue is at or below
    /// the rank tolerance.
    pub fn require_rank(&self, d: usize) -> Result<()> {
        if d > self.rank {
            let index = self.rank + 1;
            return Err(Error::RankDeficient {
                index,
                value: self.lambda_hat(index),
                tolerance: self.rank_tol,
            });
        }
        Ok(())
    }

    pub fn sampling_svd(&self) -> SamplingSvd {
        let r = self.rank;
        SamplingSvd {
            singular_values: self.eigenvalues[..r].iter().map(|v| v.sqrt()).collect(),
            left_frame: self.left.columns(0, r).into_owned(),
            right_frame: self.right.columns(0, r).into_owned(),
        }
    }
}

/// SVD of `n^{-1/2} S_n` using the route chosen by problem shape.
pub fn sampling_svd(design: &DMatrix<f64>) -> Result<SamplingSvd> {
    Ok(EmpiricalSpectrum::compute(design, Route::Auto)?.sampling_svd())
}
