//! Semi-supervised classification with a clamped Potts model.
//!
//! Every data point is a spin with `q` states. Labelled points are clamped to
//! their class and the remaining spins are distributed according to the
//! Boltzmann weight `exp(-E/T)` of the Potts energy over a similarity graph.
//! The distribution is estimated for all temperatures at once: a Wang-Landau
//! walk estimates the density of states, a frozen flat-histogram walk collects
//! per-energy-bin statistics, and those statistics are reweighted to any `T`.
//! Points are then classified from the reweighted marginals and pairwise
//! correlations.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! multi-walker parallelism live in the `mcssl` companion crate.
//!
//! Class states are 0-based (`0..q`) throughout this crate. Text formats
//! written by the companion crate present them 1-based.

#![no_std]

extern crate alloc;

pub mod build;
pub mod classify;
mod error;
pub mod exact;
pub mod math;
pub mod mincut;
pub mod model;
pub mod sampler;

pub use error::{Error, Result};
pub use model::{DataGraph, Edge, EnergyBinning, SpinConfiguration};
