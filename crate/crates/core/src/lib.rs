//! Bound states, critical coupling constants and threshold decay envelopes
//! for radial Schrödinger operators made of a square well plus a repulsive
//! tail.
//!
//! * [`specfun`]: `K0`/`K1` and the closed-form exponential weights.
//! * [`potentials`]: the model family.
//! * [`solver`]: Numerov shooting for ground states on a uniform grid.
//! * [`threshold`]: critical couplings by log-derivative matching and by
//!   bisection on bound-state existence; zero-energy states.
//! * [`envelope`]: weighted decay envelopes, admissibility margins and
//!   tail fits.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envelope;
pub mod error;
pub mod io;
pub mod potentials;
pub mod solver;
pub mod specfun;
pub mod threshold;

pub use error::{Error, Result};
pub use potentials::{RadialModel, Symmetry, Tail};
pub use solver::{EigenResult, Grid, SolveOptions, Wavefunction};
