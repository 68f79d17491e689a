//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Domain errors (`NotFluid`, `OverPacked`, ...) indicate that the requested
/// quantity is not defined for the given model or arguments; they are not
/// numerical failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model failed validation (negative activity, non-integer lattice
    /// length, non-finite parameter, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The series Σ z_k e^{θ ℓ_k} diverges at the requested point.
    #[error("divergent series at theta = {theta}")]
    DivergentSeries { theta: f64 },

    /// Boundary values were requested but the abscissa of convergence is +∞.
    #[error("abscissa of convergence is infinite; no boundary to evaluate")]
    InfiniteAbscissa,

    /// No θ makes Σ z_k e^{θ ℓ_k} finite.
    #[error("unstable activities: no theta gives a finite series")]
    Unstable,

    /// Densities are only defined in the fluid regime.
    #[error("not in the fluid regime: {0}")]
    NotFluid(&'static str),

    /// Σ ℓ_k ρ_k ≥ 1; the density vector is not realizable.
    #[error("over-packed densities: sum of length-weighted densities = {occupied} >= 1")]
    OverPacked { occupied: f64 },

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    DomainError(String),

    /// Empty multi-index passed where a non-zero one is required.
    #[error("invalid multi-index: at least one species count must be positive")]
    InvalidIndex,

    /// An enumeration would exceed its safety cap.
    #[error("cap exceeded: {what} = {requested} > {limit}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    /// A zero-length species makes the requested finite-volume sum infinite.
    #[error("zero-length species: continuous partition sums require l_min > 0")]
    ZeroLengthSpecies,

    /// All activities vanish where a strictly positive one is required.
    #[error("degenerate model: {0}")]
    Degenerate(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
