//! Computation and verification engine for the universal ellipsitomic KZB
//! connection: the Lie algebras of infinitesimal ellipsitomic braids, their
//! derivation algebras, twisted theta kernels, flat-connection identity
//! checks, truncated holonomy, dynamical r-matrix realizations and Cherednik
//! representations.

// pub mod cherednik; // (in progress)
pub mod connection;
pub mod derivations;
pub mod envelope;
pub mod gamma;
pub mod lie;
pub mod linalg;
pub mod monodromy;
pub mod presentation;
pub mod realization;
pub mod report;
pub mod scalar;
pub mod series;
pub mod theta;

pub use gamma::{GammaElement, GammaGroup, GammaMorphism};
pub use lie::{Generator, LieElement};
pub use presentation::PresentationContext;
pub use scalar::{Rat, C64};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degree overflow: requested degree {requested} exceeds cap {cap}")]
    DegreeOverflow { requested: usize, cap: usize },
    #[error("bidegree ({0},{1}) outside context cap")]
    OutOfCap(usize, usize),
    #[error("resource guard: {what} at {which} has dimension {dim}, guard is {guard}")]
    ResourceGuard {
        what: &'static str,
        which: String,
        dim: usize,
        guard: usize,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("near-singularity: {what} within {dist:.3e} of the twisted lattice")]
    NearSingular { what: String, dist: f64 },
    #[error("internal consistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
