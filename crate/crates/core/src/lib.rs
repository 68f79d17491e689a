//! Exact thermodynamics for one-dimensional mixtures of non-overlapping rods.
//!
//! A mixture is described by an [`ActivityModel`]: an ensemble (continuum
//! line or integer lattice) together with a family of rod lengths ℓ_k and
//! activities z_k. The crate computes
//!
//! * regime classification (fluid / close-packing / transition) and the
//!   pressure via its fixed-point equation ([`regime`]),
//! * the packing fraction, the Legendre transform of g, and the
//!   large-deviation rate function of the packing fraction ([`regime`]),
//! * activity-expansion coefficients in exact rational arithmetic, the exact
//!   and classical sufficient convergence criteria, a brute-force colored-tree
//!   oracle, and formal power-series verification ([`expansions`]),
//! * species densities, the pressure-density (virial) closed forms and the
//!   activity/density domain-separation demonstration ([`virial`]),
//! * exact finite-volume partition functions, packing-fraction histograms and
//!   renewal asymptotics ([`finite_volume`]).
//!
//! All operations are pure functions of their inputs; values are freely
//! shareable across threads.
//!
//! ```
//! use tonks::{ActivityModel, EnsembleKind};
//! use tonks::regime::{packing_fraction, pressure};
//!
//! // Lattice monomers at activity 1: p = ln 2, half the sites covered.
//! let m = ActivityModel::finite(EnsembleKind::Discrete, &[(1.0, 1.0)])?;
//! assert!((pressure(&m)?.p - std::f64::consts::LN_2).abs() < 1e-12);
//! assert!((packing_fraction(&m)? - 0.5).abs() < 1e-12);
//! # Ok::<(), tonks::Error>(())
//! ```

pub mod bignum;
pub mod error;
pub mod expansions;
pub mod finite_volume;
pub mod model;
pub mod regime;
pub mod solve;
pub mod virial;

pub use error::{Error, Result};
pub use model::{ActivityModel, Boundary, EnsembleKind, Entry, Family, TailBound};
pub use regime::{FixedPointSolution, Regime, RegimeReport};
