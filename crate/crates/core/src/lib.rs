//! Low-dimensional polytope embeddings of multiclass outcome spaces.
//!
//! Outcomes are bound to the vertices of a polytope `P ⊂ R^d`. A distribution
//! `p` over the outcomes is embedded as the convex combination `φ(p) = Σ p_y v_y`,
//! and a strictly convex generator `G` induces the surrogate loss
//! `L(u, y) = D_G(v_y ‖ u)` whose expected-loss minimizer is exactly `φ(p)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: dense two-phase simplex LPs, hull membership, Wolfe's
//!   min-norm-point projection, hull distances and edge certificates.
//! * [`polytope`]: cube, permutahedron, cross-polytope and generic vertex sets.
//! * [`embedding`]: distributions, the embedding map and fiber LPs.
//! * [`surrogate`]: Bregman generators and the induced loss.
//! * [`links`]: the MAP link and the low-noise link over scaled sub-polytopes.
//! * [`regions`]: strict-calibration / inconsistency / hallucination maps.
//! * [`multi_instance`]: cross-polytope comparisons and mode aggregation.
//! * [`trainer`]: stochastic minimization of the empirical surrogate loss.

pub mod embedding;
mod error;
pub mod geometry;
pub mod links;
pub mod multi_instance;
pub mod polytope;
pub mod regions;
pub mod surrogate;
pub mod trainer;

pub use error::{Error, Result};

/// Euclidean norm.
pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
