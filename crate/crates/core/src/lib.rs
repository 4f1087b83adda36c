//! Exact verification of McDiarmid-type concentration bounds for weighted
//! Hamming distances on finite product spaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`hamming`]: weight vectors, points, α-Hamming distances and sets.
//! - [`space`]: finite product spaces, product and joint laws, enumeration
//!   and seeded sampling.
//! - [`functionals`]: evaluable functions with optional coordinate-drop
//!   families, certificates for the structural conditions, medians and means.
//! - [`bounds`]: closed-form tail, gap and moment bounds.
//! - [`estimators`]: exact laws of distances and functionals, plus Monte Carlo
//!   estimates with Hoeffding bands.
//! - [`verify`]: scenario harness that pairs exact quantities with every
//!   applicable bound and emits reports.
//! - [`scenario_file`] and [`cli`]: the JSON scenario format and the
//!   command-line front end.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod estimators;
pub mod functionals;
pub mod hamming;
pub mod report;
pub mod scenario_file;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use hamming::{AlphaWeights, Point, SetSpec};
pub use space::{Distribution, FiniteSpace};

/// Absolute tolerance used for float comparisons of quantities that are
/// exact in rational arithmetic (distances, probabilities, slack).
pub const EXACT_TOL: f64 = 1e-12;
