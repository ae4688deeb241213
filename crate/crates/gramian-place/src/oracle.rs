//! Exhaustive reference solvers for small instances. They enumerate actuator
//! sets by cardinality and report every minimum-cardinality witness, giving
//! the test suite a ground truth to compare the greedy selections against.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::objective::{
    default_ctrl_tol, feasibility_bound, min_energy_with_tol, EpsilonObjective, TransferSpec,
};
use crate::system::{ActuatorSet, GramianBasis};

/// Exhaustive search is capped here; the count of candidate sets doubles per
/// node and past this size the sweep stops being a practical test oracle.
pub const MAX_ORACLE_NODES: usize = 20;

/// Outcome of an exhaustive search.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Smallest cardinality at which any set qualifies.
    pub min_cardinality: usize,
    /// Every qualifying set of that cardinality, in lexicographic order.
    pub witnesses: Vec<ActuatorSet>,
    /// Number of sets whose predicate was evaluated.
    pub evaluated: usize,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ORACLE_NODES {
        return Err(Error::InvalidParameter(format!(
            "exhaustive search supports at most {MAX_ORACLE_NODES} nodes; got {n}"
        )));
    }
    Ok(())
}

fn collect_minimum<F>(n: usize, mut qualifies: F) -> Result<Option<OracleResult>>
where
    F: FnMut(&ActuatorSet) -> Result<bool>,
{
    let mut evaluated = 0usize;
    for k in 1..=n {
        let mut witnesses = Vec::new();
        for combo in (0..n).combinations(k) {
            let set = ActuatorSet::from_indices(n, &combo)?;
            evaluated += 1;
            if qualifies(&set)? {
                witnesses.push(set);
            }
        }
        if !witnesses.is_empty() {
            return Ok(Some(OracleResult {
                min_cardinality: k,
                witnesses,
                evaluated,
            }));
        }
    }
    Ok(None)
}

/// Minimum-cardinality actuator sets achieving the transfer with energy at
/// most `energy` while the set's Gramian stays invertible at the default
/// controllability threshold.
///
/// Errors with `InfeasibleEnergy` when even the full node set needs more
/// than `energy`, so every caller learns the search range was empty rather
/// than receiving a vacuous "nothing found".
pub fn brute_force_min_actuators(
    basis: &GramianBasis,
    transfer: &TransferSpec,
    energy: f64,
) -> Result<OracleResult> {
    check_size(basis.n())?;
    if !energy.is_finite() || energy <= 0.0 {
        return Err(Error::InvalidParameter(
            "energy bound must be finite and positive".into(),
        ));
    }
    let bound = feasibility_bound(basis, transfer)?;
    if energy < bound {
        return Err(Error::InfeasibleEnergy { energy, bound });
    }
    let tol = default_ctrl_tol(basis);
    let result = collect_minimum(basis.n(), |set| {
        match min_energy_with_tol(basis, set, transfer, tol) {
            Ok(e) => Ok(e <= energy),
            Err(Error::NotControllable { .. }) => Ok(false),
            Err(err) => Err(err),
        }
    })?;
    // The full set qualifies by the precheck, so a witness always exists.
    result.ok_or_else(|| {
        Error::NumericalConditioning(
            "exhaustive search found no feasible set despite a feasible full set".into(),
        )
    })
}

/// Minimum-cardinality actuator sets whose regularized objective satisfies
/// φ(Δ) ≤ `energy` — the surrogate problem the greedy algorithm covers.
pub fn brute_force_min_actuators_regularized(
    basis: &GramianBasis,
    transfer: &TransferSpec,
    energy: f64,
    epsilon: f64,
) -> Result<OracleResult> {
    check_size(basis.n())?;
    if !energy.is_finite() || energy <= 0.0 {
        return Err(Error::InvalidParameter(
            "energy bound must be finite and positive".into(),
        ));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon > 1.0 / energy {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1/E]; got {epsilon} with 1/E = {}",
            1.0 / energy
        )));
    }
    let obj = EpsilonObjective::new(basis, transfer, epsilon)?;
    if obj.phi(&ActuatorSet::full(basis.n()))? > energy {
        return Err(Error::InfeasibleForEpsilon { epsilon });
    }
    let result = collect_minimum(basis.n(), |set| Ok(obj.phi(set)? <= energy))?;
    result.ok_or_else(|| {
        Error::NumericalConditioning(
            "exhaustive search found no feasible set despite a feasible full set".into(),
        )
    })
}
