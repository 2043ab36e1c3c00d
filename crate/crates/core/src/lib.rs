//! Secure two-terminal channel simulation and secret-key generation.
//!
//! - [`prob`]: exact finite-alphabet pmfs and entropic functionals.
//! - [`region`]: rate-region membership, binning constraint systems and
//!   special-case criteria.
//! - [`fm`]: Fourier–Motzkin elimination with LP-certified redundancy removal.
//! - [`protocol`]: finite-blocklength random-binning protocol, exact and
//!   Monte-Carlo measurement.
//! - [`scenario`]: the JSON scenario format shared by every front end.

pub mod fm;
pub mod prob;
pub mod protocol;
pub mod region;
pub mod scalar;
pub mod scenario;

pub use scalar::{Coefficient, Real};

/// Double-precision pmf, the default everywhere.
pub type JointPmf = prob::JointPmf<f64>;
pub type JointPmf32 = prob::JointPmf<f32>;
pub type Channel = prob::Channel<f64>;
/// Inequality system with exact rational coefficients.
pub type LinearSystem = fm::LinearSystem<num_rational::Rational64>;
/// Inequality system with float coefficients, for comparison runs.
pub type FloatSystem = fm::LinearSystem<f64>;
