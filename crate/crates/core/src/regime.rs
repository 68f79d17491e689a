//! Regime classification, the pressure fixed point, the packing fraction,
//! the Legendre transform of g, and the large-deviation rate function.
//!
//! The pressure of a stable mixture is determined by a fixed-point equation:
//!
//! * continuum: p = Σ_k z_k e^{-p ℓ_k},
//! * lattice:  1 - e^{-p} = Σ_k z_k e^{-k p}.
//!
//! When the equation has a solution with -p below the abscissa of
//! convergence θ*, the mixture is a fluid and the solution is the pressure;
//! when it has none the system is close-packed and p = -θ*. The dividing
//! case is decided by comparing g(θ*) against -θ* (continuum) or
//! 1 - e^{θ*} (lattice), using certified enclosures.

use crate::error::{Error, Result};
use crate::model::{ActivityModel, Boundary, EnsembleKind};
use crate::solve::{bisect_refine, expand_down, expand_up};

/// Phase classification of an activity model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Fluid,
    ClosePacking,
    Transition,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Fluid => write!(f, "fluid"),
            Regime::ClosePacking => write!(f, "close-packing"),
            Regime::Transition => write!(f, "transition"),
        }
    }
}

/// Classification together with its witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Abscissa of convergence θ* (may be +∞).
    pub theta_star: f64,
    /// lim_{θ↗θ*} g(θ); +∞ when the boundary series diverges or θ* = +∞
    /// with a positive-length species present.
    pub boundary_g: f64,
    /// When the certified enclosure of g(θ*) straddles the classification
    /// threshold, the report is `Transition` and this records the enclosure
    /// width that made the comparison indeterminate.
    pub indeterminate_width: Option<f64>,
}

/// Pressure together with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    /// Pressure (units of inverse length).
    pub p: f64,
    /// Residual of the defining equation at `p`; 0 by convention on the
    /// close-packing/transition branch where no equation is solved.
    pub residual: f64,
    /// Certified sign-change bracket for `p` (degenerate on the -θ* branch).
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub regime: RegimeReport,
}

/// Threshold that g(θ*) is compared against, per ensemble.
fn boundary_threshold(kind: EnsembleKind, theta_star: f64) -> f64 {
    match kind {
        EnsembleKind::Continuous => -theta_star,
        EnsembleKind::Discrete => 1.0 - theta_star.exp(),
    }
}

/// Classify a model as fluid, close-packing, or transition.
pub fn classify(model: &ActivityModel) -> Result<RegimeReport> {
    classify_with(model, crate::model::DEFAULT_TOL)
}

/// [`classify`] with an explicit tolerance request for the boundary
/// enclosure (the transition-detection width).
pub fn classify_with(model: &ActivityModel, tol: f64) -> Result<RegimeReport> {
    model.check_stability()?;
    let theta_star = model.abscissa();
    if theta_star.is_infinite() {
        let boundary_g = if model.is_identically_zero() {
            0.0
        } else if model
            .finite_entries()
            .map(|es| es.iter().all(|e| e.length == 0.0))
            .unwrap_or(false)
        {
            model.zero_length_activity()
        } else {
            f64::INFINITY
        };
        return Ok(RegimeReport {
            regime: Regime::Fluid,
            theta_star,
            boundary_g,
            indeterminate_width: None,
        });
    }
    let g_star = match model.eval_g_tol(theta_star, 0, tol) {
        Ok(tb) => Boundary::Finite(tb),
        Err(Error::DivergentSeries { .. }) => Boundary::Divergent,
        Err(e) => return Err(e),
    };
    let threshold = boundary_threshold(model.kind(), theta_star);
    let (regime, boundary_g, width) = match g_star {
        Boundary::Divergent => (Regime::Fluid, f64::INFINITY, None),
        Boundary::Finite(tb) => {
            if tb.value > threshold {
                (Regime::Fluid, tb.value, None)
            } else if tb.upper() < threshold {
                (Regime::ClosePacking, tb.value, None)
            } else {
                (Regime::Transition, tb.value, Some(tb.bound))
            }
        }
    };
    Ok(RegimeReport { regime, theta_star, boundary_g, indeterminate_width: width })
}

/// Residual of the pressure equation at a trial pressure `p`.
fn pressure_residual(model: &ActivityModel, p: f64) -> Result<f64> {
    let g = model.eval_g(-p, 0)?.value;
    Ok(match model.kind() {
        EnsembleKind::Continuous => g - p,
        EnsembleKind::Discrete => g - (1.0 - (-p).exp()),
    })
}

fn pressure_residual_derivative(model: &ActivityModel, p: f64) -> Result<f64> {
    let g1 = model.eval_g(-p, 1)?.value;
    Ok(match model.kind() {
        EnsembleKind::Continuous => -g1 - 1.0,
        EnsembleKind::Discrete => -g1 - (-p).exp(),
    })
}

/// Pressure of the model.
///
/// Fluid regime: the unique root p > max(0, -θ*) of the fixed-point
/// equation, found by doubling the bracket until the residual changes sign,
/// 80 bisection steps and Newton refinement to residual ≤ 1e-12.
/// Close-packing and transition regimes: p = -θ* exactly, no equation solved.
pub fn pressure(model: &ActivityModel) -> Result<FixedPointSolution> {
    pressure_with(model, 1e-12)
}

/// [`pressure`] with an explicit residual tolerance.
pub fn pressure_with(model: &ActivityModel, residual_tol: f64) -> Result<FixedPointSolution> {
    let report = classify(model)?;
    match report.regime {
        Regime::ClosePacking | Regime::Transition => {
            let p = -report.theta_star;
            Ok(FixedPointSolution {
                p,
                residual: 0.0,
                bracket: (p, p),
                iterations: 0,
                regime: report,
            })
        }
        Regime::Fluid => {
            if model.is_identically_zero() {
                return Ok(FixedPointSolution {
                    p: 0.0,
                    residual: 0.0,
                    bracket: (0.0, 0.0),
                    iterations: 0,
                    regime: report,
                });
            }
            // p > lo with residual(lo+) > 0; lo itself is never evaluated
            // (g may diverge at -θ* exactly).
            let lo = if report.theta_star.is_finite() {
                (-report.theta_star).max(0.0)
            } else {
                0.0
            };
            let f = |p: f64| pressure_residual(model, p);
            let df = |p: f64| pressure_residual_derivative(model, p);
            let hi = expand_up(f, lo, 1.0)?;
            let r = bisect_refine(f, df, lo, hi, residual_tol)?;
            Ok(FixedPointSolution {
                p: r.root,
                residual: r.residual,
                bracket: r.bracket,
                iterations: r.iterations,
                regime: report,
            })
        }
    }
}

/// Length-weighted activity sum u = g'(-p) that feeds the packing fraction.
fn weighted_sum_at_pressure(model: &ActivityModel, p: f64) -> Result<f64> {
    Ok(model.eval_g(-p, 1)?.value)
}

/// Packing fraction σ ∈ [0, 1]: the fraction of volume covered by rods in
/// the infinite-volume limit.
///
/// Fluid: σ = u/(1+u) on the continuum and σ = u/(e^{-p}+u) on the lattice,
/// with u = g'(-p). Close-packing: 1. Transition: the saturation value σ*
/// built from u* = lim g'(θ*) (only a one-sided concentration bound holds
/// there; σ* is the fluid-side saturation by convention).
pub fn packing_fraction(model: &ActivityModel) -> Result<f64> {
    let report = classify(model)?;
    match report.regime {
        Regime::ClosePacking => Ok(1.0),
        Regime::Fluid => {
            if model.is_identically_zero() {
                return Ok(0.0);
            }
            let sol = pressure(model)?;
            let u = weighted_sum_at_pressure(model, sol.p)?;
            Ok(match model.kind() {
                EnsembleKind::Continuous => u / (1.0 + u),
                EnsembleKind::Discrete => u / ((-sol.p).exp() + u),
            })
        }
        Regime::Transition => {
            let (_, g1) = model.boundary_values()?;
            match g1 {
                Boundary::Divergent => Ok(1.0),
                Boundary::Finite(tb) => {
                    let u_star = tb.value;
                    Ok(match model.kind() {
                        EnsembleKind::Continuous => u_star / (1.0 + u_star),
                        EnsembleKind::Discrete => {
                            u_star / (report.theta_star.exp() + u_star)
                        }
                    })
                }
            }
        }
    }
}

/// u* = lim_{θ↗θ*} g'(θ): +∞ when θ* = +∞ and a positive-length species
/// exists, or when the boundary derivative diverges.
fn u_star(model: &ActivityModel) -> Result<f64> {
    let theta_star = model.abscissa();
    if theta_star.is_infinite() {
        // g' -> ∞ unless every species has zero length.
        let all_zero_length = model
            .finite_entries()
            .map(|es| es.iter().all(|e| e.length == 0.0))
            .unwrap_or(false);
        return Ok(if all_zero_length { 0.0 } else { f64::INFINITY });
    }
    let (_, g1) = model.boundary_values()?;
    Ok(g1.as_f64())
}

/// Legendre transform φ(u) = sup_θ [θ u - g(θ)] (with g = +∞ past θ*).
///
/// For 0 < u < u* the supremum is attained at the solution of g'(θ) = u;
/// for u ≥ u* (finite θ*) φ continues affinely with slope θ*, which
/// collapses to φ(u) = θ* u - g(θ*).
pub fn legendre_phi(model: &ActivityModel, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::DomainError(format!("legendre transform needs u > 0, got {u}")));
    }
    if model.is_identically_zero() {
        return Err(Error::Degenerate("all activities vanish; the supremum is +infinity"));
    }
    let ustar = u_star(model)?;
    if ustar == 0.0 {
        return Err(Error::Degenerate(
            "no positive-length species; the supremum is +infinity",
        ));
    }
    let theta_star = model.abscissa();
    if u >= ustar && theta_star.is_finite() {
        // Affine continuation; g(θ*) is finite whenever u* is.
        let g_star = match model.boundary_values()? {
            (Boundary::Finite(tb), _) => tb.value,
            (Boundary::Divergent, _) => {
                return Err(Error::DivergentSeries { theta: theta_star })
            }
        };
        return Ok(theta_star * u - g_star);
    }
    // Interior: solve g'(θ) = u for θ < θ*. f(θ) = u - g'(θ) is decreasing.
    let f = |theta: f64| Ok(u - model.eval_g(theta, 1)?.value);
    let df = |theta: f64| Ok(-model.eval_g(theta, 2)?.value);
    let seed = if theta_star.is_finite() { theta_star - 1.0 } else { 0.0 };
    let lo = if f(seed)? > 0.0 { seed } else { expand_down(f, seed, 1.0)? };
    let hi = if theta_star.is_finite() {
        theta_star // f(θ*-) = u - u* < 0; endpoint never evaluated
    } else {
        expand_up(f, lo, 1.0)?
    };
    let r = bisect_refine(f, df, lo, hi, 1e-12)?;
    let theta = r.root;
    Ok(theta * u - model.eval_g(theta, 0)?.value)
}

/// Large-deviation rate function I(σ) = (1-σ) φ(σ/(1-σ)) of the packing
/// fraction, for σ ∈ (0, 1). Its minimum over σ equals -p.
pub fn rate_function(model: &ActivityModel, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::DomainError(format!(
            "rate function is defined on (0,1), got sigma = {sigma}"
        )));
    }
    let u = sigma / (1.0 - sigma);
    Ok((1.0 - sigma) * legendre_phi(model, u)?)
}
