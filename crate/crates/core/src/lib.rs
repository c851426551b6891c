//! Discrete XY and N-clock spin fields on `Ω ∩ εZ²`.
//!
//! The crate computes lattice energies, discrete vorticity measures, the flat
//! distance between atomic measures, explicit recovery constructions, the core
//! energy of a lattice vortex and the renormalized energy of a vortex
//! configuration, together with a small harness that sweeps `ε` across the
//! three scaling regimes of the clock model.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod energy;
pub mod error;
pub mod fieldio;
pub mod flat_metric;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod minimization;
pub mod render;
pub mod vorticity;

pub use error::{Error, Result};
pub use geometry::{Domain, Mat2, Point, UnitVec};
pub use lattice::{ClockField, ClockParams, Lattice, SpinField};
pub use vorticity::VortexMeasure;

/// Pairwise (tree) summation. The result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
