//! q-state spin model on K x L grid graphs with Metropolis dynamics.
//!
//! The crate has two halves. One constructs things: grid instances
//! ([`lattice`]), spin configurations with exact integer energies
//! ([`config`]), bridge/cross structure ([`geometry`]), and explicit
//! single-spin-flip paths between configurations ([`paths`]). The other
//! measures things: stochastic hitting times under the Metropolis kernel
//! ([`dynamics`]), exhaustive small-system analysis of the energy landscape
//! and the transition matrix ([`exact`]), and statistical verdicts over
//! simulation output ([`stats`]).
//!
//! The quantity tying everything together is the energy barrier Gamma of an
//! instance: the reference paths of [`paths`] attain it constructively, the
//! minimax oracle of [`exact`] confirms it exhaustively, and the low-
//! temperature scaling of hitting times, spectral gap, and mixing time
//! measured by [`dynamics`] and [`exact`] grows like exp(beta * Gamma).
//!
//! [`cli`] carries the experiment configuration and report types used by the
//! `potts` binary.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod exact;
pub mod geometry;
pub mod lattice;
pub mod paths;
pub mod stats;

mod error;

pub use error::{Error, Result};
