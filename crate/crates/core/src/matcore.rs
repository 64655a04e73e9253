//! Dense symmetric linear algebra: eigendecomposition, matrix functions,
//! spectral norms, and the scalar truncation function.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative asymmetry accepted by the [`SymMat`] constructor.
pub const ASYM_TOL: f64 = 1e-8;

/// Relative tolerance for treating a matrix as positive semi-definite.
pub const PSD_TOL: f64 = 1e-10;

/// Relative residual allowed for an eigendecomposition.
pub const EIGEN_TOL: f64 = 1e-10;

/// The truncation function `psi(x) = (|x| ∧ 1) sign(x)`, i.e. a clamp to
/// `[-1, 1]` that is the identity near zero.
pub fn psi(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "psi: input must be finite, got {x}"
        )));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// A dense symmetric `d x d` matrix of `f64`.
///
/// The constructor symmetrizes its input as `(A + A^T)/2` and rejects inputs
/// whose asymmetry exceeds `ASYM_TOL` relative to the largest entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat {
    data: DMatrix<f64>,
}

impl SymMat {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::InvalidArgument(format!(
                "SymMat: expected a nonempty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "SymMat: entries must be finite".into(),
            ));
        }
        let max_abs = m.amax();
        let mut asym = 0.0f64;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_abs > 0.0 && asym > ASYM_TOL * max_abs {
            return Err(Error::InvalidArgument(format!(
                "SymMat: asymmetry {asym:e} exceeds {ASYM_TOL:e} * max entry {max_abs:e}"
            )));
        }
        Ok(Self::from_symmetric(m))
    }

    /// Symmetrize without the asymmetry check. For internal use where the
    /// input is symmetric by construction up to rounding.
    pub(crate) fn from_symmetric(m: DMatrix<f64>) -> Self {
        let sym = (&m + m.transpose()) * 0.5;
        SymMat { data: sym }
    }

    pub fn zeros(d: usize) -> Self {
        SymMat {
            data: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        SymMat {
            data: DMatrix::identity(d, d),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMat {
            data: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag)),
        }
    }

    /// Build from a row-major slice of `d*d` entries.
    pub fn from_row_major(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    /// Largest absolute entry-wise difference to another matrix.
    pub fn max_entry_diff(&self, other: &SymMat) -> f64 {
        (&self.data - &other.data).amax()
    }
}

impl std::ops::Sub for &SymMat {
    type Output = SymMat;
    fn sub(self, rhs: &SymMat) -> SymMat {
        SymMat {
            data: &self.data - &rhs.data,
        }
    }
}

impl std::ops::Add for &SymMat {
    type Output = SymMat;
    fn add(self, rhs: &SymMat) -> SymMat {
        SymMat {
            data: &self.data + &rhs.data,
        }
    }
}

impl std::ops::Mul<f64> for &SymMat {
    type Output = SymMat;
    fn mul(self, rhs: f64) -> SymMat {
        SymMat {
            data: &self.data * rhs,
        }
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues sorted descending
/// with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Eigen {
    /// Eigenvalues, sorted descending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Orthonormal eigenvectors as matrix columns, in the order of `values`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Recompose `U f(Λ) U^T` for a scalar map over the eigenvalues.
    pub fn recompose<F: Fn(f64) -> f64>(&self, f: F) -> Result<SymMat> {
        let d = self.values.len();
        let mut mapped = Vec::with_capacity(d);
        for &v in &self.values {
            let fv = f(v);
            if !fv.is_finite() {
                return Err(Error::Numeric(format!(
                    "matrix function produced non-finite value {fv} at eigenvalue {v}"
                )));
            }
            mapped.push(fv);
        }
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(mapped));
        let m = &self.vectors * lam * self.vectors.transpose();
        Ok(SymMat::from_symmetric(m))
    }
}

/// One pass of cyclic Jacobi rotations on `b` (assumed symmetric and close to
/// diagonal), with the rotations accumulated into the columns of `u`.
/// Quadratic convergence polishes an eigenbasis to machine precision.
fn jacobi_sweeps(b: &mut DMatrix<f64>, u: &mut DMatrix<f64>) {
    let d = b.nrows();
    for _ in 0..30 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off += 2.0 * b[(p, q)] * b[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * b.norm().max(f64::MIN_POSITIVE) {
            return;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let bpq = b[(p, q)];
                if bpq == 0.0 {
                    continue;
                }
                let tau = (b[(q, q)] - b[(p, p)]) / (2.0 * bpq);
                let t = tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..d {
                    let bip = b[(i, p)];
                    let biq = b[(i, q)];
                    b[(i, p)] = c * bip - s * biq;
                    b[(i, q)] = s * bip + c * biq;
                }
                for j in 0..d {
                    let bpj = b[(p, j)];
                    let bqj = b[(q, j)];
                    b[(p, j)] = c * bpj - s * bqj;
                    b[(q, j)] = s * bpj + c * bqj;
                }
                for i in 0..d {
                    let uip = u[(i, p)];
                    let uiq = u[(i, q)];
                    u[(i, p)] = c * uip - s * uiq;
                    u[(i, q)] = s * uip + c * uiq;
                }
            }
        }
    }
}

fn reconstruction_residual(a: &SymMat, values: &[f64], vectors: &DMatrix<f64>) -> f64 {
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(values));
    let recon = vectors * lam * vectors.transpose();
    let resid = (&recon - a.matrix()).norm();
    let scale = a.matrix().norm();
    if scale > 0.0 {
        resid / scale
    } else {
        resid
    }
}

fn sort_descending(raw_values: &[f64], raw_vectors: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = raw_values.len();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| raw_values[j].partial_cmp(&raw_values[i]).unwrap());
    let values: Vec<f64> = idx.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (col, &i) in idx.iter().enumerate() {
        vectors.set_column(col, &raw_vectors.column(i));
    }
    (values, vectors)
}

/// Eigendecomposition with a residual check: the reconstruction
/// `U Λ U^T` must match the input within `EIGEN_TOL` relative Frobenius error.
/// When the QL-based solver leaves a larger residual, the basis is polished
/// with Jacobi rotations before the check is enforced.
pub fn sym_eigen(a: &SymMat) -> Result<Eigen> {
    let se = nalgebra::SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver failed to converge".into()))?;

    // Descending sort, stable tie order by original index.
    let (mut values, mut vectors) = sort_descending(se.eigenvalues.as_slice(), &se.eigenvectors);

    if reconstruction_residual(a, &values, &vectors) > EIGEN_TOL {
        let mut b = vectors.transpose() * a.matrix() * &vectors;
        b = (&b + b.transpose()) * 0.5;
        jacobi_sweeps(&mut b, &mut vectors);
        let refined: Vec<f64> = (0..a.dim()).map(|i| b[(i, i)]).collect();
        (values, vectors) = sort_descending(&refined, &vectors.clone());
    }

    let rel = reconstruction_residual(a, &values, &vectors);
    if rel > EIGEN_TOL {
        return Err(Error::Numeric(format!(
            "eigendecomposition residual {rel:e} exceeds {EIGEN_TOL:e}"
        )));
    }

    Ok(Eigen { values, vectors })
}

/// `f(A) = U f(Λ) U^T` for symmetric `A = U Λ U^T`.
pub fn matrix_function<F: Fn(f64) -> f64>(f: F, a: &SymMat) -> Result<SymMat> {
    sym_eigen(a)?.recompose(f)
}

/// Operator norm: the largest absolute eigenvalue.
pub fn op_norm(a: &SymMat) -> Result<f64> {
    let e = sym_eigen(a)?;
    Ok(e.values().iter().fold(0.0f64, |m, &v| m.max(v.abs())))
}

/// Frobenius norm.
pub fn fro_norm(a: &SymMat) -> f64 {
    a.matrix().norm()
}

/// Nuclear norm: the sum of absolute eigenvalues.
pub fn nuclear_norm(a: &SymMat) -> Result<f64> {
    let e = sym_eigen(a)?;
    Ok(e.values().iter().map(|v| v.abs()).sum())
}

pub fn trace(a: &SymMat) -> f64 {
    a.matrix().trace()
}

/// Effective rank `tr(A) / ||A||` for a PSD nonzero matrix.
///
/// Small negative eigenvalues down to `-PSD_TOL * ||A||` are tolerated.
pub fn effective_rank(a: &SymMat) -> Result<f64> {
    let e = sym_eigen(a)?;
    let op = e.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if op == 0.0 {
        return Err(Error::InvalidArgument(
            "effective_rank: zero matrix".into(),
        ));
    }
    let min = e.values().last().copied().unwrap();
    if min < -PSD_TOL * op {
        return Err(Error::InvalidArgument(format!(
            "effective_rank: matrix is indefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(trace(a) / op)
}

/// Number of eigenvalues above `PSD_TOL * ||A||`; a numerical rank.
pub fn numerical_rank(a: &SymMat) -> Result<usize> {
    let e = sym_eigen(a)?;
    let op = e.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if op == 0.0 {
        return Ok(0);
    }
    Ok(e.values().iter().filter(|&&v| v.abs() > PSD_TOL * op).count())
}
