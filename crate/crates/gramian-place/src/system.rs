//! Linear network systems and their per-node controllability Gramians.
//!
//! The Gramian of an actuator set decomposes as a sum of n constant PSD
//! matrices, one per node. This module builds that basis for finite horizons
//! (block matrix exponential) or infinite horizons (Lyapunov solves), and
//! generates the two test-bed families: integrator chains and seeded random
//! networks.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    matrix_exp, sym_eig, symmetrize, LyapunovSolver, Mat, Matrix, HURWITZ_MARGIN, SYM_TOL,
};

/// Integration horizon for the Gramian: a finite window or the infinite limit
/// (which requires a Hurwitz state matrix).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite { t0: f64, t1: f64 },
    Infinite,
}

impl Horizon {
    /// Window length for finite horizons.
    pub fn tau(&self) -> Option<f64> {
        match self {
            Horizon::Finite { t0, t1 } => Some(t1 - t0),
            Horizon::Infinite => None,
        }
    }
}

/// Time-invariant linear dynamics x' = A x + B u with a fixed horizon mode.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: Mat,
    horizon: Horizon,
}

fn rightmost_real_part(a: &Mat) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

impl LinearSystem {
    /// Finite-horizon system over [t0, t1].
    pub fn new_finite(a: Matrix, t0: f64, t1: f64) -> Result<Self> {
        let a = a.into_inner();
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if t1 <= t0 || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon needs t1 > t0; got [{t0}, {t1}]"
            )));
        }
        Ok(Self {
            a,
            horizon: Horizon::Finite { t0, t1 },
        })
    }

    /// Infinite-horizon system; `a` must be Hurwitz.
    pub fn new_infinite(a: Matrix) -> Result<Self> {
        let a = a.into_inner();
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let rightmost = rightmost_real_part(&a);
        if rightmost >= HURWITZ_MARGIN {
            return Err(Error::NotHurwitz { rightmost });
        }
        Ok(Self {
            a,
            horizon: Horizon::Infinite,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }
}

/// Subset of actuated nodes in an n-node system.
///
/// Stored as sorted 0-based indices; human-facing labels (Display, CLI, JSON)
/// are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActuatorSet {
    members: Vec<usize>,
    n: usize,
}

impl ActuatorSet {
    /// Empty set over n nodes.
    pub fn empty(n: usize) -> Self {
        Self {
            members: Vec::new(),
            n,
        }
    }

    /// All n nodes.
    pub fn full(n: usize) -> Self {
        Self {
            members: (0..n).collect(),
            n,
        }
    }

    /// From 0-based indices; sorts, deduplicates, and range-checks.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut members: Vec<usize> = indices.to_vec();
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        Ok(Self { members, n })
    }

    /// From 1-based node labels, as they appear in CLI input and output.
    pub fn from_nodes(n: usize, nodes: &[usize]) -> Result<Self> {
        let mut indices = Vec::with_capacity(nodes.len());
        for &node in nodes {
            if node == 0 || node > n {
                return Err(Error::IndexOutOfRange { index: node, n });
            }
            indices.push(node - 1);
        }
        Self::from_indices(n, &indices)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    /// Adds a 0-based index (no-op if present).
    pub fn insert(&mut self, index: usize) -> Result<()> {
        if index >= self.n {
            return Err(Error::IndexOutOfRange { index, n: self.n });
        }
        if let Err(pos) = self.members.binary_search(&index) {
            self.members.insert(pos, index);
        }
        Ok(())
    }

    /// Sorted 0-based indices.
    pub fn indices(&self) -> &[usize] {
        &self.members
    }

    /// Sorted 1-based node labels.
    pub fn node_labels(&self) -> Vec<usize> {
        self.members.iter().map(|i| i + 1).collect()
    }

    /// 0-based indices not in the set.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.n).filter(|i| !self.contains(*i)).collect()
    }
}

impl std::fmt::Display for ActuatorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, label) in self.node_labels().iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{label}")?;
        }
        write!(f, "}}")
    }
}

/// The n per-node Gramians of a system; the Gramian of any actuator set is
/// the sum of its members' matrices.
#[derive(Debug, Clone)]
pub struct GramianBasis {
    gammas: Vec<Mat>,
    full: Mat,
    horizon: Horizon,
    n: usize,
}

impl GramianBasis {
    /// Assemble a basis from externally computed per-node Gramians.
    ///
    /// Each matrix must be n-by-n (n = number of matrices), symmetric, and
    /// positive semidefinite up to roundoff.
    pub fn from_gammas(gammas: Vec<Mat>, horizon: Horizon) -> Result<Self> {
        let n = gammas.len();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "Gramian basis needs at least one node".into(),
            ));
        }
        for g in &gammas {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.nrows().max(g.ncols()),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(
                    "Gramian basis entries must be finite".into(),
                ));
            }
            let scale = 1.0 + g.amax();
            if (g - g.transpose()).amax() > SYM_TOL * scale {
                return Err(Error::InvalidParameter(
                    "per-node Gramians must be symmetric".into(),
                ));
            }
            let eig = sym_eig(g)?;
            if eig.lambda_min() < -1e-10 * scale {
                return Err(Error::InvalidParameter(
                    "per-node Gramians must be positive semidefinite".into(),
                ));
            }
        }
        let mut full = Mat::zeros(n, n);
        for g in &gammas {
            full += g;
        }
        Ok(GramianBasis {
            gammas,
            full,
            horizon,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    /// Per-node Gramian of 0-based node `i`.
    pub fn gamma(&self, i: usize) -> &Mat {
        &self.gammas[i]
    }

    /// Gramian of the full node set (cached sum of the basis).
    pub fn full_gramian(&self) -> &Mat {
        &self.full
    }

    /// Sum of the members' per-node Gramians; zero matrix for the empty set.
    pub fn gramian_of(&self, set: &ActuatorSet) -> Result<Mat> {
        if set.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: set.n(),
            });
        }
        let mut acc = Mat::zeros(self.n, self.n);
        for &i in set.indices() {
            acc += &self.gammas[i];
        }
        Ok(acc)
    }
}

/// Convenience free function mirroring [`GramianBasis::gramian_of`].
pub fn gramian_of(basis: &GramianBasis, set: &ActuatorSet) -> Result<Mat> {
    basis.gramian_of(set)
}

/// Finite-horizon per-node Gramian by the block-exponential construction:
/// exponentiate [[-A, E_ii], [0, A^T]] * tau and multiply the upper-right
/// block by the transposed lower-right block.
fn finite_gamma(a: &Mat, i: usize, tau: f64) -> Result<Mat> {
    let n = a.nrows();
    let mut block = Mat::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-a * tau));
    block[(i, n + i)] = tau;
    block
        .view_mut((n, n), (n, n))
        .copy_from(&(a.transpose() * tau));
    let e = matrix_exp(&block)?;
    let g12 = e.view((0, n), (n, n));
    let f22 = e.view((n, n), (n, n));
    Ok(symmetrize(&(f22.transpose() * g12)))
}

/// Builds the per-node Gramian basis for the system's horizon mode.
///
/// Work fans out across nodes; the result is deterministic regardless of
/// scheduling.
pub fn build_gramian_basis(sys: &LinearSystem) -> Result<GramianBasis> {
    let n = sys.n();
    let gammas: Vec<Mat> = match sys.horizon() {
        Horizon::Finite { t0, t1 } => {
            let tau = t1 - t0;
            (0..n)
                .into_par_iter()
                .map(|i| finite_gamma(sys.a(), i, tau))
                .collect::<Result<_>>()?
        }
        Horizon::Infinite => {
            let solver = LyapunovSolver::new(sys.a())?;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut q = Mat::zeros(n, n);
                    q[(i, i)] = 1.0;
                    solver.solve(&q)
                })
                .collect::<Result<_>>()?
        }
    };
    for g in &gammas {
        for (idx, x) in g.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    row: idx % n,
                    col: idx / n,
                });
            }
        }
    }
    let mut full = Mat::zeros(n, n);
    for g in &gammas {
        full += g;
    }
    Ok(GramianBasis {
        gammas,
        full,
        horizon: sys.horizon(),
        n,
    })
}

/// Chain of leaky integrators: -1 on the diagonal, +1 on the first
/// subdiagonal, horizon [0, 1].
pub fn integrator_chain(n: usize) -> Result<LinearSystem> {
    if n == 0 {
        return Err(Error::InvalidParameter("chain needs n >= 1".into()));
    }
    let mut a = Mat::identity(n, n) * -1.0;
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    LinearSystem::new_finite(Matrix::new(a)?, 0.0, 1.0)
}

/// Edge probability of the random network family: 2 ln(n) / n.
pub fn edge_probability(n: usize) -> f64 {
    2.0 * (n as f64).ln() / n as f64
}

/// Shifts the spectrum left by 1.1 times the rightmost eigenvalue real part,
/// unconditionally: A - 1.1 Re(lambda_rightmost) I.
///
/// For matrices with a strictly unstable rightmost eigenvalue the result's
/// rightmost real part lands at -0.1 times the original. Already-stable input
/// is shifted rightward by the same rule; callers wanting a Hurwitz guarantee
/// must check afterward.
pub fn stabilize(a: &Mat) -> Mat {
    let rightmost = rightmost_real_part(a);
    a - Mat::identity(a.nrows(), a.ncols()) * (1.1 * rightmost)
}

/// Directed random network: each cell is present independently with
/// probability 2 ln(n)/n and carries a standard-normal weight.
///
/// Stream order is fixed for reproducibility: cells scanned row-major, one
/// Bernoulli draw per cell, one Gaussian draw per present cell. With
/// `include_self_loops = false`, diagonal cells are skipped entirely and
/// consume no draws. The matrix is stabilized and returned in infinite-horizon
/// mode; the Hurwitz check can fail only if the shifted spectrum still touches
/// the imaginary axis, which the caller may handle by reseeding.
pub fn erdos_renyi_system_with(n: usize, seed: u64, include_self_loops: bool) -> Result<LinearSystem> {
    if n < 2 {
        return Err(Error::InvalidParameter("random network needs n >= 2".into()));
    }
    let p = edge_probability(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if !include_self_loops && i == j {
                continue;
            }
            if rng.random_bool(p) {
                a[(i, j)] = StandardNormal.sample(&mut rng);
            }
        }
    }
    LinearSystem::new_infinite(Matrix::new(stabilize(&a))?)
}

/// [`erdos_renyi_system_with`] including self-loops (the default rule).
pub fn erdos_renyi_system(n: usize, seed: u64) -> Result<LinearSystem> {
    erdos_renyi_system_with(n, seed, true)
}

/// JSON document for a system: `{"n": .., "A": [[row-major]], "horizon":
/// {"t0": .., "t1": ..} | "infinite"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDoc {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub horizon: HorizonDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HorizonDoc {
    Finite { t0: f64, t1: f64 },
    Tag(String),
}

impl SystemDoc {
    pub fn from_system(sys: &LinearSystem) -> Self {
        let n = sys.n();
        let a = (0..n)
            .map(|i| (0..n).map(|j| sys.a()[(i, j)]).collect())
            .collect();
        let horizon = match sys.horizon() {
            Horizon::Finite { t0, t1 } => HorizonDoc::Finite { t0, t1 },
            Horizon::Infinite => HorizonDoc::Tag("infinite".into()),
        };
        Self { n, a, horizon }
    }

    pub fn into_system(self) -> Result<LinearSystem> {
        let matrix = Matrix::from_rows(&self.a)?;
        if matrix.nrows() != self.n || matrix.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        match self.horizon {
            HorizonDoc::Finite { t0, t1 } => LinearSystem::new_finite(matrix, t0, t1),
            HorizonDoc::Tag(tag) if tag == "infinite" => LinearSystem::new_infinite(matrix),
            HorizonDoc::Tag(tag) => Err(Error::InvalidParameter(format!(
                "unknown horizon tag {tag:?}; expected \"infinite\" or {{\"t0\", \"t1\"}}"
            ))),
        }
    }
}
