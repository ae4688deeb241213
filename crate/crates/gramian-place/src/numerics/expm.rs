//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (orders 3/5/7/9/13 selected by the 1-norm, Higham's method).

use super::Mat;
use crate::error::{Error, Result};

const THETA_3: f64 = 1.495585217958292e-2;
#[allow(clippy::excessive_precision)]
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Evaluates the order-m approximant given the even powers present for that
/// order and returns (U, V) with r = (V - U)^{-1}(V + U).
fn pade_uv(a: &Mat, powers: &[&Mat], b: &[f64]) -> (Mat, Mat) {
    let n = a.nrows();
    let eye = Mat::identity(n, n);
    // powers = [A^2, A^4, ...]; odd coefficients build U = A * P(even), even build V.
    let mut p = &eye * b[1];
    let mut v = &eye * b[0];
    for (k, pw) in powers.iter().enumerate() {
        p += *pw * b[2 * k + 3];
        v += *pw * b[2 * k + 2];
    }
    (a * p, v)
}

fn pade_13(a: &Mat, a2: &Mat, a4: &Mat, a6: &Mat) -> (Mat, Mat) {
    let n = a.nrows();
    let eye = Mat::identity(n, n);
    let u_high = a6 * (a6 * B13[13] + a4 * B13[11] + a2 * B13[9]);
    let u_low = a6 * B13[7] + a4 * B13[5] + a2 * B13[3] + &eye * B13[1];
    let v_high = a6 * (a6 * B13[12] + a4 * B13[10] + a2 * B13[8]);
    let v_low = a6 * B13[6] + a4 * B13[4] + a2 * B13[2] + &eye * B13[0];
    (a * (u_high + u_low), v_high + v_low)
}

fn solve_pade(u: Mat, v: Mat) -> Result<Mat> {
    let rhs = &v + &u;
    let lu = nalgebra::LU::new(v - u);
    lu.solve(&rhs)
        .ok_or_else(|| Error::NumericalConditioning("Pade denominator is singular".into()))
}

/// Computes e^A for a square matrix.
///
/// Relative accuracy is ~1e-12 for norms up to the tens; inputs are scaled by
/// powers of two below the order-13 threshold and the result squared back.
pub fn matrix_exp(a: &Mat) -> Result<Mat> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }

    if norm <= THETA_9 {
        let a2 = a * a;
        let (u, v) = if norm <= THETA_3 {
            pade_uv(a, &[&a2], &B3)
        } else if norm <= THETA_5 {
            let a4 = &a2 * &a2;
            pade_uv(a, &[&a2, &a4], &B5)
        } else if norm <= THETA_7 {
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            pade_uv(a, &[&a2, &a4, &a6], &B7)
        } else {
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let a8 = &a6 * &a2;
            pade_uv(a, &[&a2, &a4, &a6, &a8], &B9)
        };
        return solve_pade(u, v);
    }

    // Scale so the norm falls under the order-13 threshold, then square back.
    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as u32;
    let scaled = a / f64::powi(2.0, s as i32);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let (u, v) = pade_13(&scaled, &a2, &a4, &a6);
    let mut r = solve_pade(u, v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Vector;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn max_abs(m: &Mat) -> f64 {
        m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = matrix_exp(&Mat::zeros(2, 2)).unwrap();
        assert_eq!(e, Mat::identity(2, 2));
    }

    #[test]
    fn exp_of_diagonal_exponentiates_entries() {
        let a = Mat::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        let e = matrix_exp(&a).unwrap();
        assert_relative_eq!(e[(0, 0)], 1.0_f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(e[(1, 1)], (-1.0_f64).exp(), max_relative = 1e-14);
        assert!(e[(0, 1)].abs() < 1e-15 && e[(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn exp_of_nilpotent_truncates_series() {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e = matrix_exp(&a).unwrap();
        let expected = Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(max_abs(&(e - expected)) < 1e-15);
    }

    #[test]
    fn exp_rejects_non_square() {
        assert!(matrix_exp(&Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn exp_of_rotation_matches_closed_form() {
        // exp([[0, -t], [t, 0]]) = [[cos t, -sin t], [sin t, cos t]]
        for &t in &[0.3, 2.0, 11.5] {
            let a = Mat::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
            let e = matrix_exp(&a).unwrap();
            assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-12);
            assert_relative_eq!(e[(1, 0)], t.sin(), epsilon = 1e-12);
        }
    }

    // exp(A) exp(-A) = I for moderate norms; 100 random instances.
    #[test]
    fn exp_inverse_identity_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(11);
        for trial in 0..100 {
            let n = 2 + (trial % 7);
            let a = Mat::from_fn(n, n, |_, _| 5.0 * (rng.random::<f64>() - 0.5));
            let e = matrix_exp(&a).unwrap();
            let einv = matrix_exp(&(-&a)).unwrap();
            let residual = max_abs(&(&e * &einv - Mat::identity(n, n)));
            assert!(residual <= 1e-9, "trial {trial}: residual {residual:.3e}");
        }
    }

    // Semigroup property exp(2A) = exp(A)^2 exercises the squaring phase.
    #[test]
    fn exp_semigroup_on_random_instances() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..20 {
            let a = Mat::from_fn(6, 6, |_, _| 3.0 * (rng.random::<f64>() - 0.5));
            let e1 = matrix_exp(&a).unwrap();
            let e2 = matrix_exp(&(&a * 2.0)).unwrap();
            let scale = 1.0 + max_abs(&e2);
            assert!(max_abs(&(&e1 * &e1 - e2)) <= 1e-10 * scale);
        }
    }
}
