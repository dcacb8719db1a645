//! Workbench for finite partial-monitoring games with two outcomes.
//!
//! A game is a pair of N x 2 matrices: a loss matrix with exact rational
//! entries and a feedback matrix whose entries are opaque symbols. The
//! library classifies such games by their minimax regret growth rate
//! (trivial, easy, hard, hopeless, or degenerate), runs adaptive policies
//! against oblivious environments, and ships the statistical tooling used
//! to validate the regret rates empirically.
//!
//! Module map:
//! - [`games`]: exact-arithmetic game analysis and classification
//! - [`policies`]: the AppleTree tree policy and baseline policies
//! - [`simul`]: environments, single runs, and seed-split batch runs
//! - [`analysis`]: regret-exponent fitting and numeric theory checks
//! - [`sweep`]: experiment sweeps written out as CSV / JSON / gnuplot

pub mod analysis;
pub mod games;
pub mod policies;
pub mod simul;
pub mod sweep;
