//! Continuous-time Lyapunov solver A G + G A^T = -Q via real Schur
//! factorization with quasi-triangular back-substitution, factoring A once so
//! many right-hand sides share the O(n^3) Schur step.

use super::{symmetrize, Mat, HURWITZ_MARGIN};
use crate::error::{Error, Result};

/// Real Schur factorization of a Hurwitz matrix, reusable across right-hand sides.
pub struct LyapunovSolver {
    /// Orthogonal factor U with A = U T U^T.
    u: Mat,
    /// Quasi-upper-triangular factor (1x1 and 2x2 diagonal blocks).
    t: Mat,
    /// Diagonal block layout as (start, size) with size 1 or 2.
    blocks: Vec<(usize, usize)>,
    n: usize,
}

impl LyapunovSolver {
    /// Factors `a`, rejecting non-square or non-Hurwitz input
    /// (rightmost eigenvalue real part must be below -1e-9).
    pub fn new(a: &Mat) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 0).ok_or_else(|| {
            Error::NumericalConditioning("Schur factorization did not converge".into())
        })?;
        let (u, t) = schur.unpack();

        let mut blocks = Vec::new();
        let mut i = 0;
        while i < n {
            let size = if i + 1 < n && t[(i + 1, i)] != 0.0 { 2 } else { 1 };
            blocks.push((i, size));
            i += size;
        }
        // Eigenvalue real parts read off the diagonal blocks: a 2x2 block holds a
        // complex pair with common real part (t11 + t22) / 2.
        let mut rightmost = f64::NEG_INFINITY;
        for &(s, size) in &blocks {
            let re = if size == 2 {
                0.5 * (t[(s, s)] + t[(s + 1, s + 1)])
            } else {
                t[(s, s)]
            };
            rightmost = rightmost.max(re);
        }
        if rightmost >= HURWITZ_MARGIN {
            return Err(Error::NotHurwitz { rightmost });
        }
        Ok(Self { u, t, blocks, n })
    }

    /// Solves A G + G A^T = -Q for symmetric Q; the result is symmetrized.
    pub fn solve(&self, q: &Mat) -> Result<Mat> {
        if q.nrows() != self.n || q.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: q.nrows(),
            });
        }
        // Rotate into Schur coordinates: T Y + Y T^T = C with C = -U^T Q U.
        let c = -(self.u.transpose() * q * &self.u);
        let y = self.solve_quasi_triangular(c)?;
        Ok(symmetrize(&(&self.u * y * self.u.transpose())))
    }

    /// Back-substitution for T Y + Y T^T = C with quasi-upper-triangular T.
    ///
    /// Block column j of the unknown couples only with later block columns
    /// (through Y T^T) and later block rows (through T Y), so both loops run
    /// in descending order, bottoming out in 1x1..2x2 Sylvester systems.
    fn solve_quasi_triangular(&self, c: Mat) -> Result<Mat> {
        let n = self.n;
        let t = &self.t;
        let mut y = Mat::zeros(n, n);
        for &(js, jn) in self.blocks.iter().rev() {
            // R_j = C[:, j] - sum_{m > j} Y[:, m] T[j, m]^T
            let mut r = c.view((0, js), (n, jn)).into_owned();
            for &(ms, mn) in self.blocks.iter().rev() {
                if ms <= js {
                    break;
                }
                let tjm = t.view((js, ms), (jn, mn));
                r -= y.view((0, ms), (n, mn)) * tjm.transpose();
            }
            let tjj = t.view((js, js), (jn, jn)).into_owned();
            for &(is, inn) in self.blocks.iter().rev() {
                // B = R[i, :] - sum_{l > i} T[i, l] Y_j[l, :]
                let mut b = r.view((is, 0), (inn, jn)).into_owned();
                for &(ls, ln) in self.blocks.iter().rev() {
                    if ls <= is {
                        break;
                    }
                    b -= t.view((is, ls), (inn, ln)) * y.view((ls, js), (ln, jn));
                }
                let tii = t.view((is, is), (inn, inn)).into_owned();
                let z = solve_small_sylvester(&tii, &tjj, &b)?;
                y.view_mut((is, js), (inn, jn)).copy_from(&z);
            }
        }
        Ok(y)
    }
}

/// Solves T1 Z + Z T2^T = B for Z (block sizes at most 2), by the Kronecker
/// form (I (x) T1 + T2 (x) I) vec(Z) = vec(B) on at most 4 unknowns.
fn solve_small_sylvester(t1: &Mat, t2: &Mat, b: &Mat) -> Result<Mat> {
    let (p, q) = (t1.nrows(), t2.nrows());
    let mut m = Mat::zeros(p * q, p * q);
    for j in 0..q {
        for i in 0..p {
            let row = j * p + i;
            for k in 0..p {
                m[(row, j * p + k)] += t1[(i, k)];
            }
            for k in 0..q {
                m[(row, k * p + i)] += t2[(j, k)];
            }
        }
    }
    let rhs = Mat::from_fn(p * q, 1, |r, _| b[(r % p, r / p)]);
    let z = nalgebra::LU::new(m).solve(&rhs).ok_or_else(|| {
        Error::NumericalConditioning("singular Sylvester block; eigenvalue sum near zero".into())
    })?;
    Ok(Mat::from_fn(p, q, |i, j| z[(j * p + i, 0)]))
}

/// One-shot convenience around [`LyapunovSolver`] for a single right-hand side.
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    LyapunovSolver::new(a)?.solve(q)
}
