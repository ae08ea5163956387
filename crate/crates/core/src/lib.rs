//! Theta functions with rational characteristics on the Siegel upper
//! half-space, and numerical certification of the identities relating them:
//! addition theorems, the correspondence between first- and second-derivative
//! pairings, reconstruction of theta constants from gradient frames, and
//! Jacobi-type derivative formulas.

// `!(x < bound)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod identities;
pub mod jacobi;
pub mod moduli;
pub mod numeric;
pub mod period;
pub mod rational;
pub mod theta;
pub mod truncation;

pub use error::{Result, ThetaError};
pub use period::PeriodMatrix;
pub use rational::{cexp, LiftedVector, Rational, RationalVector};
pub use theta::{theta_jet, theta_jet_lifted, theta_scaled_jet, ThetaJet, ZScaling};
pub use truncation::{tail_bound, TruncationPolicy};
