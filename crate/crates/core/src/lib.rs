//! Underlay spectrum sharing with a full-duplex primary pair.
//!
//! A half-duplex secondary user (SU) shares the band of a full-duplex primary
//! pair (PU) and may transmit an improper Gaussian signal. This crate evaluates
//! the achievable rates of both systems at the channel-to-noise-ratio (CNR)
//! level and designs the SU transmit power and circularity coefficient:
//!
//! - [`model`]: scenario types and closed-form rate expressions.
//! - [`solver`]: proper-signaling power control and the joint
//!   power/circularity design over breakpoint-delimited intervals.
//! - [`oracle`]: brute-force grid search used to check the solver.
//! - [`montecarlo`]: Rayleigh-fading sampling and parameter sweeps.
//! - [`cli`]: the `igs-underlay` command-line front end.
//!
//! Heavy loops (trials, grid rows) run on rayon when the `parallel` feature is
//! enabled and fall back to plain iteration otherwise. Results do not depend
//! on the execution mode.

pub mod cli;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod par;
pub mod solver;

pub use error::{Error, Result};
pub use model::{db_to_linear, Node, RateReport, Scenario, ScenarioStatistics, SignalDesign};
pub use par::Execution;
pub use solver::{solve_igs, solve_pgs, Solution, SolutionKind};
