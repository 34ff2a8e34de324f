//! Sharpness-aware optimization with adaptive PSF sampling and reuse.
//!
//! The optimizers in [`optim`] run over any [`objectives::GradientOracle`]:
//! analytic quadratics and a two-well landscape (where the SAM gradient
//! decomposition can be checked exactly), logistic regression, and small
//! MLPs differentiated by the tape in [`net`]. [`scheduler`] decides when the
//! adaptive variants pay for a full SAM step, [`harness`] runs reproducible
//! experiments and [`verify`] holds the property checks.

pub mod error;
pub mod fmt;
pub mod harness;
pub mod net;
pub mod objectives;
pub mod optim;
pub mod rng;
pub mod scheduler;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use tensor::{LayerMap, NormSelector, ParamVector, Segment};
