//! Parameter space decomposition: admissible orders of input polynomials.

pub mod cache;
pub mod certify;
pub mod enumerate;
pub mod relax;
pub mod signature;
pub mod solve;
pub mod structure;
pub mod witness;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::LogicCache;
pub use enumerate::{candidate_orders, extends_dominance};
pub use signature::{FactorShape, Signature};
pub use solve::{collapse_type2, AdmissibleOrder, AdmissibleOrderSet, Solver};
pub use structure::{
    dominance_order, evaluate_polynomials, DominanceOrder, ParameterPoint, Structure,
};
pub use witness::{find_witness, relative_margin};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("signature syntax error at position {position}: {message}")]
    SignatureSyntax { position: usize, message: String },
    #[error("interaction order {order} exceeds the cap of {cap}")]
    OrderTooLarge { order: usize, cap: usize },
    #[error("parameters must be strictly positive")]
    NonPositiveParameter,
    #[error("expected {expected} parameters per family, found {found}")]
    ParameterLength { expected: usize, found: usize },
    #[error("witness does not separate ratios of signature {0}")]
    WitnessDegenerate(String),
    #[error("logic cache write failed: {0}")]
    CacheWrite(String),
    #[error("logic cache entry {path} is invalid: {reason}")]
    CacheCorrupt { path: String, reason: String },
    #[error("solver inconsistency: {0}")]
    Inconsistent(String),
}

/// Witness-search and enumeration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Largest pair-contracted order that will be enumerated.
    pub cap: usize,
    pub seed: u64,
    /// Random restarts per candidate order.
    pub restarts: usize,
    /// Descent steps per restart.
    pub steps: usize,
    /// Required relative margin between consecutive values.
    pub tolerance: f64,
    /// Random points sampled up front to seed witnesses.
    pub pool: usize,
    /// Cells the branch and bound may examine per candidate order.
    pub cells: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cap: 4,
            seed: 0x5eed,
            restarts: 10_000,
            steps: 200,
            tolerance: 1e-6,
            pool: 50_000,
            cells: 20_000,
        }
    }
}
