//! Transfer energies over actuator sets: the exact Gramian-inverse quadratic
//! form and its regularized, everywhere-finite surrogate.
//!
//! The surrogate φ agrees with the exact minimum control energy in the limit
//! ε → 0 on controllable sets, while staying finite and monotone decreasing
//! on all sets, which is what lets greedy selection run over every subset.
//! Its marginal gains diminish for commuting Gramian bases but not in
//! general; see the pinned counterexample in the tests below.

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::numerics::{matrix_exp, null_basis, sym_eig, Mat, SymEig, Vector};
use crate::system::{ActuatorSet, GramianBasis, Horizon, LinearSystem};

/// The factorized evaluation path is trusted only when ε² clears the
/// eigenvalue noise floor of the basis by this margin; otherwise φ is
/// evaluated through an eigendecomposition with saturated eigenvalues.
const FACTORIZATION_GATE: f64 = 100.0;

/// Default positive-definiteness threshold, tied to the scale of the basis:
/// 1e-9 · (1 + trace(Γ_V)/n).
pub fn default_ctrl_tol(basis: &GramianBasis) -> f64 {
    1e-9 * (1.0 + basis.full_gramian().trace() / basis.n() as f64)
}

/// A state transfer expressed as a unit direction `v` plus an orthonormal
/// basis `vbar` of its complement.
///
/// For a finite horizon the direction is x1 − e^{Aτ}x0 (the part of the
/// target the drift does not supply); over an infinite horizon the transfer
/// must start at the origin and the direction is x1 itself.
#[derive(Debug, Clone)]
pub struct TransferSpec {
    x0: Vector,
    x1: Vector,
    v: Vector,
    vbar: Vec<Vector>,
}

impl TransferSpec {
    pub fn new(system: &LinearSystem, x0: Vector, x1: Vector) -> Result<Self> {
        let n = system.n();
        for (vec, len) in [(&x0, x0.len()), (&x1, x1.len())] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
            if let Some(row) = vec.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { row, col: 0 });
            }
        }
        let direction = match system.horizon() {
            Horizon::Finite { .. } => {
                let tau = system.horizon().tau().expect("finite horizon has a length");
                let propagator = matrix_exp(&(system.a() * tau))?;
                &x1 - propagator * &x0
            }
            Horizon::Infinite => {
                if x0.iter().any(|x| *x != 0.0) {
                    return Err(Error::InvalidParameter(
                        "infinite-horizon transfers must start at the origin".into(),
                    ));
                }
                x1.clone()
            }
        };
        Self::from_parts(x0, x1, direction)
    }

    /// Build a spec directly from a transfer direction (normalized here);
    /// the endpoints are recorded as 0 → direction.
    pub fn from_direction(direction: Vector) -> Result<Self> {
        let x0 = Vector::zeros(direction.len());
        Self::from_parts(x0, direction.clone(), direction)
    }

    fn from_parts(x0: Vector, x1: Vector, direction: Vector) -> Result<Self> {
        let norm = direction.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::InvalidParameter(
                "transfer endpoints coincide; there is no direction to steer along".into(),
            ));
        }
        let v = direction / norm;
        let vbar = null_basis(&v)?;
        Ok(TransferSpec { x0, x1, v, vbar })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// Unit transfer direction.
    pub fn v(&self) -> &Vector {
        &self.v
    }

    /// Orthonormal basis of the hyperplane orthogonal to `v` (n − 1 vectors).
    pub fn vbar(&self) -> &[Vector] {
        &self.vbar
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn x1(&self) -> &Vector {
        &self.x1
    }
}

/// Outcome of a controllability test: the threshold verdict together with the
/// smallest Gramian eigenvalue it was judged against.
#[derive(Debug, Clone, Copy)]
pub struct ControlCheck {
    pub controllable: bool,
    pub lambda_min: f64,
}

/// Test whether the set's Gramian is positive definite beyond `ctrl_tol`.
pub fn is_controllable(
    basis: &GramianBasis,
    set: &ActuatorSet,
    ctrl_tol: f64,
) -> Result<ControlCheck> {
    let gamma = basis.gramian_of(set)?;
    let eig = sym_eig(&gamma)?;
    Ok(ControlCheck {
        controllable: eig.lambda_min() > ctrl_tol,
        lambda_min: eig.lambda_min(),
    })
}

/// Exact minimum transfer energy v^T Γ_Δ^{-1} v, using the default
/// controllability threshold for the positive-definiteness check.
pub fn min_energy(basis: &GramianBasis, set: &ActuatorSet, transfer: &TransferSpec) -> Result<f64> {
    min_energy_with_tol(basis, set, transfer, default_ctrl_tol(basis))
}

/// Exact minimum transfer energy with an explicit controllability threshold.
pub fn min_energy_with_tol(
    basis: &GramianBasis,
    set: &ActuatorSet,
    transfer: &TransferSpec,
    ctrl_tol: f64,
) -> Result<f64> {
    if transfer.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            found: transfer.n(),
        });
    }
    let gamma = basis.gramian_of(set)?;
    let eig = sym_eig(&gamma)?;
    let lambda_min = eig.lambda_min();
    if lambda_min <= ctrl_tol || lambda_min.is_nan() {
        return Err(Error::NotControllable {
            lambda_min,
            tol: ctrl_tol,
        });
    }
    let chol = Cholesky::new(gamma).ok_or_else(|| {
        Error::NumericalConditioning(
            "Gramian failed to factor despite clearing the eigenvalue threshold".into(),
        )
    })?;
    Ok(transfer.v().dot(&chol.solve(transfer.v())))
}

/// Least energy budget for which any actuator set can realize the transfer:
/// the exact energy of the full node set. Errors if even the full set is not
/// controllable.
pub fn feasibility_bound(basis: &GramianBasis, transfer: &TransferSpec) -> Result<f64> {
    min_energy(basis, &ActuatorSet::full(basis.n()), transfer)
}

/// Best-effort energy estimate for a set whose Gramian is not certified
/// positive definite: eigenvalues are saturated at the roundoff noise floor
/// before inverting, and energy along directions with no trustworthy
/// reachability is reported as infinite.
pub fn saturated_energy(
    basis: &GramianBasis,
    set: &ActuatorSet,
    transfer: &TransferSpec,
) -> Result<f64> {
    if transfer.n() != basis.n() {
        return Err(Error::DimensionMismatch {
            expected: basis.n(),
            found: transfer.n(),
        });
    }
    let gamma = basis.gramian_of(set)?;
    let eig = sym_eig(&gamma)?;
    let floor = basis.n() as f64 * f64::EPSILON * eig.lambda_max().max(0.0);
    let v = transfer.v();
    let mut total = 0.0;
    for j in 0..basis.n() {
        let lambda = eig.eigenvalues[j].max(floor);
        let a = eig.eigenvectors.column(j).dot(v);
        if a * a > f64::EPSILON && lambda <= 0.0 {
            return Ok(f64::INFINITY);
        }
        if lambda > 0.0 {
            total += a * a / lambda;
        }
    }
    Ok(total)
}

/// The regularized objective
///
///   φ(Δ) = v^T (Γ_Δ + εI)^{-1} v + ε Σ_i v̄_i^T (Γ_Δ + ε²I)^{-1} v̄_i,
///
/// finite for every Δ including the empty set (φ(∅) = n/ε). The second sum is
/// evaluated through the identity Σ_i v̄_i^T M^{-1} v̄_i = tr(M^{-1}) −
/// v^T M^{-1} v, so no per-complement solves are needed.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonObjective<'a> {
    basis: &'a GramianBasis,
    transfer: &'a TransferSpec,
    epsilon: f64,
    factorize: bool,
}

impl<'a> EpsilonObjective<'a> {
    pub fn new(basis: &'a GramianBasis, transfer: &'a TransferSpec, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter(
                "epsilon must be finite and positive".into(),
            ));
        }
        if transfer.n() != basis.n() {
            return Err(Error::DimensionMismatch {
                expected: basis.n(),
                found: transfer.n(),
            });
        }
        let n = basis.n() as f64;
        let scale = basis
            .full_gramian()
            .diagonal()
            .iter()
            .fold(0.0_f64, |acc, d| acc.max(*d));
        let factorize = epsilon * epsilon >= FACTORIZATION_GATE * n * n * f64::EPSILON * scale;
        Ok(EpsilonObjective {
            basis,
            transfer,
            epsilon,
            factorize,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn basis(&self) -> &GramianBasis {
        self.basis
    }

    pub fn transfer(&self) -> &TransferSpec {
        self.transfer
    }

    /// φ(Δ).
    pub fn phi(&self, set: &ActuatorSet) -> Result<f64> {
        let gamma = self.basis.gramian_of(set)?;
        self.phi_of_gramian(&gamma)
    }

    /// φ evaluated on an explicit Gramian (any PSD sum of basis members);
    /// lets callers reuse running sums during incremental set growth.
    pub fn phi_of_gramian(&self, gamma: &Mat) -> Result<f64> {
        if self.factorize {
            if let Some(value) = self.phi_factorized(gamma) {
                if value.is_finite() {
                    return Ok(value);
                }
            }
        }
        self.phi_eigen(gamma)
    }

    /// φ(Δ) − φ(Δ ∪ {node}) for a node outside the set; nonnegative up to
    /// roundoff by monotonicity.
    pub fn marginal_gain(&self, set: &ActuatorSet, node: usize) -> Result<f64> {
        if node >= self.basis.n() {
            return Err(Error::IndexOutOfRange {
                index: node,
                n: self.basis.n(),
            });
        }
        if set.contains(node) {
            return Err(Error::InvalidParameter(
                "marginal gain requires a node outside the set".into(),
            ));
        }
        let without = self.basis.gramian_of(set)?;
        let with = &without + self.basis.gamma(node);
        Ok(self.phi_of_gramian(&without)? - self.phi_of_gramian(&with)?)
    }

    /// First φ term only: v^T (Γ_Δ + εI)^{-1} v, the soft energy estimate
    /// used when comparing against an energy budget.
    pub fn soft_energy(&self, set: &ActuatorSet) -> Result<f64> {
        let gamma = self.basis.gramian_of(set)?;
        self.soft_energy_of_gramian(&gamma)
    }

    /// Soft energy on an explicit Gramian.
    pub fn soft_energy_of_gramian(&self, gamma: &Mat) -> Result<f64> {
        let v = self.transfer.v();
        if self.factorize {
            let n = gamma.nrows();
            let m = gamma + Mat::identity(n, n) * self.epsilon;
            if let Some(chol) = Cholesky::new(m) {
                let value = v.dot(&chol.solve(v));
                if value.is_finite() {
                    return Ok(value);
                }
            }
        }
        let eig = sym_eig(gamma)?;
        let floor = self.noise_floor(&eig);
        let mut value = 0.0;
        for j in 0..gamma.nrows() {
            let lambda = eig.eigenvalues[j].max(floor);
            let a = eig.eigenvectors.column(j).dot(v);
            value += a * a / (lambda + self.epsilon);
        }
        Ok(value)
    }

    fn phi_factorized(&self, gamma: &Mat) -> Option<f64> {
        let n = gamma.nrows();
        let eps = self.epsilon;
        let m1 = gamma + Mat::identity(n, n) * eps;
        let m2 = gamma + Mat::identity(n, n) * (eps * eps);
        let c1 = Cholesky::new(m1)?;
        let c2 = Cholesky::new(m2)?;
        let v = self.transfer.v();
        let steer = v.dot(&c1.solve(v));
        let aligned = v.dot(&c2.solve(v));
        // tr(M2^{-1}) = ||L^{-1}||_F^2 from M2 = L L^T.
        let l_inv = c2.l().solve_lower_triangular(&Mat::identity(n, n))?;
        let trace_inv = l_inv.norm_squared();
        Some(steer + eps * (trace_inv - aligned))
    }

    fn phi_eigen(&self, gamma: &Mat) -> Result<f64> {
        let eig = sym_eig(gamma)?;
        let floor = self.noise_floor(&eig);
        let eps = self.epsilon;
        let eps2 = eps * eps;
        let v = self.transfer.v();
        let mut steer = 0.0;
        let mut residual = 0.0;
        for j in 0..gamma.nrows() {
            let lambda = eig.eigenvalues[j].max(floor);
            let a = eig.eigenvectors.column(j).dot(v);
            let a2 = (a * a).min(1.0);
            steer += a2 / (lambda + eps);
            residual += (1.0 - a2) / (lambda + eps2);
        }
        Ok(steer + eps * residual)
    }

    /// Eigenvalues of a PSD Gramian computed in floating point are only
    /// trustworthy down to n·u·λ_max; anything below is saturated to that
    /// level so that roundoff-scale (possibly negative) eigenvalues cannot
    /// masquerade as genuine reachability.
    fn noise_floor(&self, eig: &SymEig) -> f64 {
        self.basis.n() as f64 * f64::EPSILON * eig.lambda_max().max(0.0)
    }
}
