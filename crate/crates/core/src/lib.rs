//! Counting statistics of quantum jumps for a two-level emitter coupled to a
//! thermal bath and continuously monitored along σx.
//!
//! * [`qcore`]: 2×2 operators, density matrices, 4×4 superoperators.
//! * [`channels`]: Kraus maps for radiative jumps and the spin measurement.
//! * [`trajectory`]: conditional trajectories and ensemble statistics.
//! * [`lde`]: tilted generator, scaled cumulant generating function, moments.
//! * [`fockcheck`]: derivation of the radiative Kraus operators from a
//!   truncated emitter–field model.

// `!(x > 0.0)` is used on purpose so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Dense index loops read closer to the textbook matrix algorithms.
#![allow(clippy::needless_range_loop)]

pub mod channels;
pub mod dynamics;
pub mod error;
pub mod fockcheck;
pub mod lde;
pub mod params;
pub mod qcore;
pub mod trajectory;

pub use channels::{KrausSet, Outcome, SpinChannel};
pub use error::{Error, Result};
pub use lde::{Counter, MomentReport, TiltParams};
pub use params::{ModelParams, Rates, SpinMode};
pub use qcore::{DensityMatrix, Operator2, Superoperator4, C64};
pub use trajectory::{CountRecord, EnsembleStats, StepSummary};
