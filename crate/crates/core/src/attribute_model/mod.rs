//! Pairwise attribute model: smoothed priors, the evidence-ratio pair score,
//! and MAP inference over the fully connected pairwise model.
//!
//! For attributes `i`, `j` with detector posteriors `q` and prior marginals
//! `m`, a configuration `(s_i, s_j)` scores
//!
//! ```text
//! q_i(s_i)/m_i(s_i) · q_j(s_j)/m_j(s_j) · P(A_i = s_i, A_j = s_j)
//! ```
//!
//! The joint MAP objective is the sum over all pairs `i < j` of the log pair
//! scores, so each node's evidence ratio enters once per partner.

mod map;
mod pair;
mod priors;

use thiserror::Error;

use crate::registry::Registry;

pub use map::{
    is_local_max, joint_map_icm, objective, Exhaustive, Icm, MapResult, MapSolver, MAX_EXHAUSTIVE_ATTRIBUTES,
};
pub use pair::{pair_map, pair_score, PairMap};
pub use priors::{estimate_priors, AttributePriorModel, JointTable};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("no attribute sets to estimate priors from")]
    EmptyInput,
    #[error("smoothing alpha must be positive, got {0}")]
    Alpha(f64),
    #[error("attribute index {index} out of range for {len} attributes")]
    Index { index: usize, len: usize },
    #[error("pair score needs two distinct attributes, got {0} twice")]
    SelfPair(usize),
    #[error("marginal of attribute {index} is {value}, must lie strictly inside (0,1)")]
    DegenerateMarginal { index: usize, value: f64 },
    #[error("all four pair scores are zero for attributes ({0}, {1})")]
    DegeneratePair(usize, usize),
    #[error("posterior has {got} entries, priors cover {want} attributes")]
    PosteriorLength { got: usize, want: usize },
    #[error("posterior entry {index} is {value}, outside [0,1]")]
    Posterior { index: usize, value: f64 },
    #[error("invalid prior model: {0}")]
    InvalidPriors(String),
    #[error("exhaustive MAP supports at most {max} attributes, got {got}")]
    TooManyAttributes { got: usize, max: usize },
    #[error("max_sweeps must be at least 1")]
    ZeroSweeps,
}

/// Detector posteriors P(A_i | f), one per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributePosterior(Vec<f64>);

impl AttributePosterior {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(ModelError::Posterior { index, value });
        }
        Ok(AttributePosterior(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// q_i(s): the posterior of state `s` for attribute `i`.
    pub fn state_prob(&self, i: usize, s: bool) -> f64 {
        if s {
            self.0[i]
        } else {
            1.0 - self.0[i]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverParams {
    pub max_sweeps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { max_sweeps: 10 }
    }
}

pub fn solver_registry() -> Registry<dyn MapSolver, SolverParams> {
    let mut r: Registry<dyn MapSolver, SolverParams> = Registry::new("MAP solver");
    r.register(
        "icm",
        &["iterated-conditional-modes"],
        "coordinate ascent from the thresholded posteriors, single flips in index order",
        |p| {
            Box::new(Icm {
                max_sweeps: p.max_sweeps,
            })
        },
    );
    r.register(
        "exhaustive",
        &["brute-force"],
        "enumerates all 2^n assignments (at most 20 attributes)",
        |_| Box::new(Exhaustive),
    );
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn posterior_domain() {
        assert!(AttributePosterior::new(vec![0.0, 1.0, 0.3]).is_ok());
        assert_eq!(
            AttributePosterior::new(vec![0.2, 1.2]),
            Err(ModelError::Posterior { index: 1, value: 1.2 })
        );
    }

    #[test]
    fn registry_lists_solvers() {
        let r = solver_registry();
        assert_eq!(r.names(), vec!["icm", "exhaustive"]);
        assert_eq!(r.create("icm", &SolverParams::default()).unwrap().name(), "icm");
    }
}
