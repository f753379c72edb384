//! Exactness certificates for two semidefinite relaxations of
//! cardinality-constrained ridge regression
//!
//! ```text
//! min_β ½‖Xβ − y‖² + ½ρ‖β‖²   s.t. ‖β‖₀ ≤ k
//! ```
//!
//! For a candidate support `S` the crate decides whether the
//! continuous boolean relaxation (threshold test on correlation scores, see
//! [`certificates::check_pwg`]) and the lifted rank-one relaxation (dual
//! certificate search by subgradient bisection on a largest-eigenvalue
//! function, see [`certificates::check_dcl`]) are exact. Independent oracles
//! ([`oracles`]) cross-check the decisions, and [`ensemble`] / [`harness`]
//! run Gaussian-ensemble recovery sweeps.

pub mod certificates;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod oracles;

pub use certificates::{
    check_dcl, check_pwg, CertOutcome, DclCertificate, KktReport, NotCertifiedReason,
    PwgCertificate,
};
pub use ensemble::{EnsembleConfig, RecoveryCurve, TrialRecord};
pub use error::{Error, Result};
pub use linalg::{ProblemInstance, RestrictedRidgeSolution, SupportSet};

/// Relative agreement tolerance shared by the oracle and certificate
/// cross-checks.
pub const DEFAULT_REL_TOL: f64 = 1e-9;
