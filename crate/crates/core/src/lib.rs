//! Schrödinger-cat interferometry through an ideal phase-insensitive
//! amplifier.
//!
//! Two independent engines describe the same experiment:
//!
//! * [`fock`] and [`pipeline`]: exact evolution of truncated two-mode number
//!   states (signal and idler) through cat preparation, two-mode squeezing,
//!   the analyzer phase shift and post-selection.
//! * [`qfunc`]: closed-form Husimi Q-function terms whose phase-space
//!   integrals give the post-selection probability analytically.
//!
//! [`audit`] compares the post-selected variance predicted by the linear
//! input/output relation with the exact state, and [`validation`] bundles
//! the numerical checks that tie everything together.

pub mod audit;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod oracle;
pub mod pipeline;
pub mod qfunc;
pub mod validation;

pub use error::{Error, Result};
pub use fock::{GainParam, Mode, Quadrature, QuadratureSpec, TwoModeState};
pub use pipeline::{ExperimentConfig, PostSelectMode, Sign, VisibilityResult};
pub use qfunc::{GaussianQTerm, QStage, QTermSet};
