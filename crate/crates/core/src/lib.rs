//! Numerical toolkit for channel coding against quantum jammers.
//!
//! The crate evaluates the entanglement-assisted adversarial capacity as a
//! saddle value of mutual information, the shared-randomness capacity of
//! classical-quantum channels with a quantum jammer, one-shot
//! hypothesis-testing divergences, and solves the finite code-vs-jammer game
//! whose value pins down the worst-case error of shared-randomness and
//! entanglement-assisted codes.
//!
//! Modules:
//! - [`qstate`]: density matrices, composite shapes, partial traces, purifications.
//! - [`channels`]: Choi-matrix channels with a jammer input slot.
//! - [`entropy`]: entropies, relative entropy, `D_max` and `D_h^eps`.
//! - [`saddle`]: saddle-point solvers for the capacity expressions.
//! - [`game`]: codes, error operators, see-saw and double-oracle game solving.
//! - [`lp`]: dense simplex solver for zero-sum matrix games.

pub mod channels;
pub mod config;
pub mod entropy;
pub mod error;
pub mod game;
pub mod json;
pub mod linalg;
pub mod lp;
pub mod qstate;
pub mod random;
pub mod saddle;

pub use error::{Error, Result};
pub use qstate::{DensityMatrix, PureState, SystemShape};
