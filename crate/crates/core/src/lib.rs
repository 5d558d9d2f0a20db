//! Random surfaces with uniformly convex gradient interaction in a quenched random field.
//!
//! The crate computes quenched ground states, samples finite-volume Gibbs measures with
//! Langevin dynamics, couples two boxes through shared noise, and measures the decay and
//! decorrelation statistics of the resulting fields. The quadratic potential is solved
//! exactly by [`gaussian_oracle`] and serves as ground truth for everything else.
//!
//! Energy convention: each undirected edge of `E(Λ⁺)` is counted once,
//! `H(φ) = Σ_{x,y} V(φ(y) - φ(x)) - λ Σ_x η(x) φ(x)`, so the Gibbs density `exp(-H)` is the
//! stationary law of `dφ = [Σ_{e∋x} V'(∇φ(e)) + λη] dt + √2 dB`.

pub mod disorder;
mod error;
pub mod experiments;
pub mod gaussian_oracle;
pub mod green;
pub mod ground_state;
pub mod langevin;
pub mod lattice;
pub mod linalg;
pub mod observables;
pub mod potential;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{Edge, LatticeBox, Point, VertexField, EdgeField};
pub use potential::Potential;
