//! Dense real linear-algebra kernels: validated matrices, sorted symmetric
//! eigendecomposition, matrix exponential, Lyapunov solves, and orthonormal
//! completion of a unit vector. No domain semantics live here.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

mod expm;
mod lyapunov;

pub use expm::matrix_exp;
pub use lyapunov::{solve_lyapunov, LyapunovSolver};

/// Dense column-major real matrix used throughout the crate.
pub type Mat = DMatrix<f64>;
/// Dense real vector.
pub type Vector = DVector<f64>;

/// Accepted asymmetry in a matrix passed to [`sym_eig`], relative to scale.
pub const SYM_TOL: f64 = 1e-10;
/// Rightmost eigenvalue real part must be below this for a matrix to count as Hurwitz.
pub const HURWITZ_MARGIN: f64 = -1e-9;
/// Unit-vector norm tolerance for [`null_basis`].
pub const UNIT_TOL: f64 = 1e-12;

/// Validated dense matrix: rectangular with every entry finite.
///
/// This is the construction boundary for user-supplied data; internal code
/// works on [`Mat`] directly once inputs have passed through here.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    inner: Mat,
}

impl Matrix {
    /// Wraps a dense matrix, rejecting NaN and infinite entries.
    pub fn new(inner: Mat) -> Result<Self> {
        for c in 0..inner.ncols() {
            for r in 0..inner.nrows() {
                if !inner[(r, c)].is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self { inner })
    }

    /// Builds from row-major nested slices, rejecting ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        for row in rows {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    found: row.len(),
                });
            }
        }
        Self::new(Mat::from_fn(nrows, ncols, |r, c| rows[r][c]))
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn inner(&self) -> &Mat {
        &self.inner
    }

    pub fn into_inner(self) -> Mat {
        self.inner
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted ascending and
/// eigenvector columns permuted to match.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vector,
    /// Orthonormal eigenvector columns; column j pairs with `eigenvalues[j]`.
    pub eigenvectors: Mat,
}

impl SymEig {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Q diag(lambda) Q^T, for reconstruction checks.
    pub fn reconstruct(&self) -> Mat {
        let q = &self.eigenvectors;
        q * Mat::from_diagonal(&self.eigenvalues) * q.transpose()
    }
}

/// Symmetrizes `(m + m^T) / 2`.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Sorted symmetric eigendecomposition.
///
/// The input may carry roundoff-level asymmetry (up to [`SYM_TOL`] relative to
/// scale) and is symmetrized before decomposition; larger asymmetry is an error.
pub fn sym_eig(m: &Mat) -> Result<SymEig> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let asym = max_abs(&(m - m.transpose()));
    if asym > SYM_TOL * (1.0 + max_abs(m)) {
        return Err(Error::InvalidParameter(format!(
            "matrix is not symmetric: asymmetry {asym:.3e}"
        )));
    }
    let se = nalgebra::SymmetricEigen::new(symmetrize(m));
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let eigenvalues = Vector::from_fn(n, |j, _| se.eigenvalues[order[j]]);
    let eigenvectors = Mat::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Orthonormal basis of the hyperplane orthogonal to a unit vector `v`.
///
/// Returns n-1 unit vectors, mutually orthonormal and orthogonal to `v`,
/// built deterministically as columns 2..n of the Householder reflector that
/// maps `v` onto the first coordinate axis.
pub fn null_basis(v: &Vector) -> Result<Vec<Vector>> {
    let n = v.len();
    let norm = v.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidParameter(format!(
            "null_basis needs a unit vector; got norm {norm:.12}"
        )));
    }
    if n <= 1 {
        return Ok(Vec::new());
    }
    // u = v + sign(v0) e1; H = I - 2 u u^T / (u^T u) sends v to -sign(v0) e1,
    // so columns 2..n of the symmetric orthogonal H are orthogonal to v.
    let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = v.clone();
    u[0] += s;
    let scale = 2.0 / u.norm_squared();
    let mut basis = Vec::with_capacity(n - 1);
    for j in 1..n {
        let mut col = Vector::zeros(n);
        col[j] = 1.0;
        col.axpy(-scale * u[j], &u, 1.0);
        basis.push(col);
    }
    Ok(basis)
}
