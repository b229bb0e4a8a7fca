//! Dense symmetric-matrix kernel.
//!
//! Density matrices are stored as `nalgebra` matrices of `f64`. Intermediary
//! matrices (the trainable factors `B` with `A = B Bᵀ`) use a flat row-major
//! buffer, since the trainers operate on them as raw parameter slices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Default relative tolerance for negative eigenvalues, as a fraction of the trace.
pub const DEFAULT_CLAMP_TOL: f64 = 1e-8;

/// Eigenvalues below this are treated as exactly zero by the entropy.
pub const EIGEN_ZERO: f64 = 1e-12;

/// Traces at or below this cannot be normalized.
pub const MIN_TRACE: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-9;
const UNIT_TRACE_TOL: f64 = 1e-9;

/// A real symmetric positive semi-definite matrix.
///
/// Construction only checks shape and finiteness. Use
/// [`DensityMatrix::check_invariants`] to validate symmetry, positivity and
/// (optionally) unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<f64>,
}

impl DensityMatrix {
    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::dims(
                format!("square matrix ({0}x{0})", mat.nrows()),
                format!("{}x{}", mat.nrows(), mat.ncols()),
            ));
        }
        if mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density matrix entry".into()));
        }
        Ok(DensityMatrix { mat })
    }

    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::dims(dim * dim, entries.len()));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        DensityMatrix {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        DensityMatrix {
            mat: DMatrix::identity(dim, dim),
        }
    }

    /// `I / d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            mat: DMatrix::identity(dim, dim) / dim as f64,
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        DensityMatrix {
            mat: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)),
        }
    }

    /// The (unnormalized) outer product `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let col = nalgebra::DVector::from_column_slice(v);
        DensityMatrix {
            mat: &col * col.transpose(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.mat[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.mat[(i, j)]);
            }
        }
        out
    }

    /// Largest absolute asymmetry `max |ρ_ij − ρ_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)]).abs());
            }
        }
        worst
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = symmetric_eigen(&self.mat).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals
    }

    /// Number of eigenvalues strictly above `tol`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tol).count()
    }

    /// Checks symmetry (`1e-9`), positivity (`λ_min ≥ −1e-8·tr`) and, when
    /// `unit_trace` is set, `|tr − 1| ≤ 1e-9`.
    pub fn check_invariants(&self, unit_trace: bool) -> Result<()> {
        let asym = self.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::Domain(format!("matrix is not symmetric (max asymmetry {asym:e})")));
        }
        let trace = self.trace();
        let tol = DEFAULT_CLAMP_TOL * trace.abs().max(MIN_TRACE);
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                tolerance: tol,
            });
        }
        if unit_trace && (trace - 1.0).abs() > UNIT_TRACE_TOL {
            return Err(Error::Domain(format!("trace {trace} is not 1")));
        }
        Ok(())
    }
}

/// A trainable `n × m` factor whose Gram product `B Bᵀ` is a density matrix.
///
/// Column `i` is the `i`-th sense vector in the multi-sense model.
#[derive(Clone, Debug, PartialEq)]
pub struct IntermediaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl IntermediaryMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("intermediary matrix entry".into()));
        }
        Ok(IntermediaryMatrix { rows, cols, data })
    }

    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        let mut data = vec![0.0; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::dims(rows, col.len()));
            }
            for (i, &v) in col.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Self::from_row_major(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntermediaryMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut b = Self::zeros(n, n);
        for i in 0..n {
            b.data[i * n + i] = 1.0;
        }
        b
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + col]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `A = B Bᵀ`, symmetric and PSD for any finite `B`.
pub fn density_from_intermediary(b: &IntermediaryMatrix) -> DensityMatrix {
    let n = b.rows;
    let mut mat = DMatrix::zeros(n, n);
    gram_into(&b.data, n, b.cols, mat.as_mut_slice());
    DensityMatrix { mat }
}

/// Writes `B Bᵀ` of a row-major `n × m` buffer into a column-major (or,
/// equivalently, since the result is symmetric, row-major) `n × n` buffer.
pub(crate) fn gram_into(b: &[f64], n: usize, m: usize, out: &mut [f64]) {
    for i in 0..n {
        let ri = &b[i * m..(i + 1) * m];
        for j in i..n {
            let rj = &b[j * m..(j + 1) * m];
            let s: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
            out[i * n + j] = s;
            out[j * n + i] = s;
        }
    }
}

/// `tr(X Y) = Σ_ij X_ij Y_ji`.
pub fn trace_inner_product(x: &DensityMatrix, y: &DensityMatrix) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::dims(x.dim(), y.dim()));
    }
    Ok(x.mat.iter().zip(y.mat.transpose().iter()).map(|(a, b)| a * b).sum())
}

/// `tr(B_t B_tᵀ B_c B_cᵀ)` computed as the squared Frobenius norm of
/// `C = B_cᵀ B_t`, avoiding the two `n × n` products.
pub fn trace_ip_from_intermediaries(
    target: &IntermediaryMatrix,
    context: &IntermediaryMatrix,
) -> Result<f64> {
    if target.rows != context.rows {
        return Err(Error::dims(
            format!("{} rows", target.rows),
            format!("{} rows", context.rows),
        ));
    }
    Ok(cross_gram_sq_norm(
        &target.data,
        &context.data,
        target.rows,
        target.cols,
        context.cols,
    ))
}

/// `‖B_cᵀ B_t‖²_F` for row-major `B_t: n × mt` and `B_c: n × mc`.
pub(crate) fn cross_gram_sq_norm(bt: &[f64], bc: &[f64], n: usize, mt: usize, mc: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..mc {
        for j in 0..mt {
            let mut c = 0.0;
            for l in 0..n {
                c += bc[l * mc + i] * bt[l * mt + j];
            }
            total += c * c;
        }
    }
    total
}

/// Symmetric PSD square root.
///
/// Eigenvalues in `[−clamp_tol·tr(A), 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn matrix_sqrt_psd(a: &DensityMatrix, clamp_tol: f64) -> Result<DensityMatrix> {
    let eig = symmetric_eigen(&a.mat);
    let tol = clamp_tol * a.trace().abs();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            tolerance: tol,
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    let mut s = q * DMatrix::from_diagonal(&roots) * q.transpose();
    symmetrize(&mut s);
    Ok(DensityMatrix { mat: s })
}

/// `S(ρ) = −Σ λ ln λ` over the eigenvalues of `ρ`.
///
/// Eigenvalues below [`EIGEN_ZERO`] contribute nothing. With `renormalize`
/// the spectrum is divided by its sum first; otherwise the raw spectrum is
/// used, so matrices whose trace is not one can exceed `ln d`.
pub fn von_neumann_entropy(rho: &DensityMatrix, renormalize: bool) -> Result<f64> {
    let eig = symmetric_eigen(&rho.mat);
    let trace = rho.trace();
    let tol = DEFAULT_CLAMP_TOL * trace.abs().max(MIN_TRACE);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if rho.dim() > 0 && min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            tolerance: tol,
        });
    }
    let mut spectrum: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l < EIGEN_ZERO { 0.0 } else { l })
        .collect();
    if renormalize {
        let total: f64 = spectrum.iter().sum();
        if total <= MIN_TRACE {
            return Err(Error::Domain("cannot renormalize a zero spectrum".into()));
        }
        spectrum.iter_mut().for_each(|l| *l /= total);
    }
    Ok(-spectrum
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum::<f64>())
}

/// `A / tr(A)`.
pub fn normalize_trace(a: &DensityMatrix) -> Result<DensityMatrix> {
    let trace = a.trace();
    if !(trace > MIN_TRACE) {
        return Err(Error::Domain(format!("cannot normalize matrix with trace {trace:e}")));
    }
    Ok(DensityMatrix { mat: &a.mat / trace })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let mut sym = m.clone();
    symmetrize(&mut sym);
    SymmetricEigen::new(sym)
}
