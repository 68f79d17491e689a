//! Species densities, the pressure-density (virial) closed forms, density →
//! activity inversion, and the activity/density domain-separation report.

use crate::error::{Error, Result};
use crate::expansions::{exact_criterion, CriterionReport};
use crate::model::{ActivityModel, EnsembleKind, Entry};
use crate::regime::{classify, pressure, Regime};

/// Number densities per species, with the species' lengths attached.
///
/// Realizable vectors satisfy Σ ℓ_k ρ_k < 1 (strictly); the virial formulas
/// refuse anything else.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    entries: Vec<SpeciesDensity>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesDensity {
    pub length: f64,
    pub rho: f64,
}

impl DensityVector {
    pub fn new(entries: Vec<SpeciesDensity>) -> Result<Self> {
        for e in &entries {
            if !(e.rho >= 0.0 && e.rho.is_finite()) {
                return Err(Error::DomainError(format!("density {} invalid", e.rho)));
            }
            if !(e.length >= 0.0 && e.length.is_finite()) {
                return Err(Error::DomainError(format!("length {} invalid", e.length)));
            }
        }
        Ok(DensityVector { entries })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(length, rho)| SpeciesDensity { length, rho })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[SpeciesDensity] {
        &self.entries
    }

    /// Σ ρ_k.
    pub fn total_number(&self) -> f64 {
        self.entries.iter().map(|e| e.rho).sum()
    }

    /// Σ ℓ_k ρ_k — the covered volume fraction.
    pub fn occupied_fraction(&self) -> f64 {
        self.entries.iter().map(|e| e.length * e.rho).sum()
    }
}

fn require_packable(rho: &DensityVector) -> Result<f64> {
    let occupied = rho.occupied_fraction();
    if occupied >= 1.0 {
        return Err(Error::OverPacked { occupied });
    }
    Ok(occupied)
}

fn require_integer_lengths(rho: &DensityVector) -> Result<()> {
    for e in rho.entries() {
        if e.length < 1.0 || e.length.fract() != 0.0 {
            return Err(Error::DomainError(format!(
                "discrete virial relations need integer lengths, got {}",
                e.length
            )));
        }
    }
    Ok(())
}

/// ρ_k = z_k ∂p/∂z_k evaluated through the fixed-point equation.
///
/// Continuous: ρ_k = z_k e^{-p ℓ_k} / (1 + Σ_j ℓ_j z_j e^{-p ℓ_j});
/// discrete:  ρ_k = z_k e^{-p k} / (e^{-p} + Σ_j j z_j e^{-p j}).
/// Defined only in the fluid regime; for the parametric infinite families
/// the per-species list is truncated adaptively once the omitted activity
/// weight at the pressure is negligible, while the denominators use the
/// full tail-bounded sums.
pub fn densities(model: &ActivityModel) -> Result<DensityVector> {
    let report = classify(model)?;
    if report.regime != Regime::Fluid {
        return Err(Error::NotFluid(
            "densities z_k dp/dz_k exist only where the fixed point is solvable",
        ));
    }
    if model.is_identically_zero() {
        return Ok(DensityVector { entries: Vec::new() });
    }
    let p = pressure(model)?.p;
    let weighted = model.eval_g(-p, 1)?.value; // Σ ℓ z e^{-pℓ}
    let denom = match model.kind() {
        EnsembleKind::Continuous => 1.0 + weighted,
        EnsembleKind::Discrete => (-p).exp() + weighted,
    };
    let mut entries = Vec::new();
    match model.finite_entries() {
        Some(es) => {
            for e in es {
                entries.push(SpeciesDensity {
                    length: e.length,
                    rho: e.z * (-p * e.length).exp() / denom,
                });
            }
        }
        None => {
            // Infinite family: stop once further species cannot move any
            // reported digit. g(-p) is finite in the fluid regime, so the
            // per-species weights decay geometrically.
            let total = model.eval_g(-p, 0)?.value;
            let mut k = 0usize;
            loop {
                let e = model.species(k).expect("parametric families are unbounded");
                let w = e.z * (-p * e.length).exp();
                entries.push(SpeciesDensity { length: e.length, rho: w / denom });
                k += 1;
                if (k >= 8 && w <= total * 1e-16) || k >= 100_000 {
                    break;
                }
            }
        }
    }
    Ok(DensityVector { entries })
}

/// Pressure from densities: p = Σρ / (1 - Σℓρ) (continuous) or
/// p = log(1 + Σρ / (1 - Σkρ)) (discrete).
pub fn virial_pressure(kind: EnsembleKind, rho: &DensityVector) -> Result<f64> {
    let occupied = require_packable(rho)?;
    if kind == EnsembleKind::Discrete {
        require_integer_lengths(rho)?;
    }
    let total = rho.total_number();
    Ok(match kind {
        EnsembleKind::Continuous => total / (1.0 - occupied),
        EnsembleKind::Discrete => (total / (1.0 - occupied)).ln_1p(),
    })
}

/// Activities that produce the given densities:
/// z_k = ρ_k e^{ℓ_k p} / (1 - Σℓρ) (continuous),
/// z_k = ρ_k e^{(k-1) p} / (1 - Σkρ) (discrete).
pub fn activities_from_densities(kind: EnsembleKind, rho: &DensityVector) -> Result<Vec<Entry>> {
    let occupied = require_packable(rho)?;
    if kind == EnsembleKind::Discrete {
        require_integer_lengths(rho)?;
    }
    let p = virial_pressure(kind, rho)?;
    let scale = 1.0 - occupied;
    Ok(rho
        .entries()
        .iter()
        .map(|e| {
            let exponent = match kind {
                EnsembleKind::Continuous => e.length * p,
                EnsembleKind::Discrete => (e.length - 1.0) * p,
            };
            Entry { length: e.length, z: e.rho * exponent.exp() / scale }
        })
        .collect())
}

/// Domain-separation report: the power-law density family ρ_k = c/k³ lies
/// inside the virial domain while its activities blow up exponentially and
/// fail the exact activity criterion.
#[derive(Debug, Clone)]
pub struct DomainSeparationReport {
    pub c: f64,
    pub species: usize,
    /// Σ k ρ_k with the documented tail correction; must be < 1.
    pub occupied_fraction: f64,
    /// Σ ρ_k with the tail correction.
    pub total_number: f64,
    /// Euler-Maclaurin remainder bounds for the two corrected sums.
    pub sum_tail_bounds: (f64, f64),
    pub in_virial_domain: bool,
    pub pressure: f64,
    /// Exact activity criterion evaluated on the truncated activity list.
    pub activity_criterion: CriterionReport,
    /// Raw per-species diagnostic log(z_k)/k (approaches p like log k / k).
    pub log_z_over_k: Vec<(usize, f64)>,
    /// Second-order growth-rate estimate per species, built from
    /// consecutive log-activity ratios; converges to p like 1/k².
    pub growth_rate: Vec<(usize, f64)>,
}

/// Σ_{k>K} k^{-s} by Euler-Maclaurin with a certified remainder:
/// K^{1-s}/(s-1) - K^{-s}/2 + s K^{-s-1}/12, error below the next term.
fn zeta_tail(s: f64, k: u64) -> (f64, f64) {
    let kf = k as f64;
    let est = kf.powf(1.0 - s) / (s - 1.0) - kf.powf(-s) / 2.0
        + s * kf.powf(-s - 1.0) / 12.0;
    let err = s * (s + 1.0) * (s + 2.0) * kf.powf(-s - 3.0) / 720.0;
    (est, err)
}

/// Build ρ_k = c/k³ up to `species`, compute p and z through the virial
/// relations, and test the exact activity criterion on the result.
///
/// Requires c ζ(2) < 1 so the family is packable.
pub fn corollary_domain_report(c: f64, species: usize) -> Result<DomainSeparationReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::DomainError(format!("c = {c} must be positive")));
    }
    if species < 3 {
        return Err(Error::DomainError("need at least 3 species".into()));
    }
    let zeta2 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    if c * zeta2 >= 1.0 {
        return Err(Error::DomainError(format!(
            "c zeta(2) = {} >= 1: family is not packable",
            c * zeta2
        )));
    }
    let k_max = species as u64;
    let mut sum_rho = 0.0; // Σ c k^{-3}
    let mut sum_k_rho = 0.0; // Σ c k^{-2}
    let mut rho = Vec::with_capacity(species);
    for k in 1..=k_max {
        let r = c / (k as f64).powi(3);
        sum_rho += r;
        sum_k_rho += (k as f64) * r;
        rho.push(SpeciesDensity { length: k as f64, rho: r });
    }
    // Tail-corrected sums: the truncated family stands in for the infinite
    // one, so report the corrected totals alongside certified remainders.
    let (t3, e3) = zeta_tail(3.0, k_max);
    let (t2, e2) = zeta_tail(2.0, k_max);
    let total_number = sum_rho + c * t3;
    let occupied = sum_k_rho + c * t2;
    if occupied >= 1.0 {
        return Err(Error::OverPacked { occupied });
    }
    let p = total_number / (1.0 - occupied);
    // Activities from the corrected virial relations.
    let scale = 1.0 - occupied;
    let mut activities = Vec::with_capacity(species);
    let mut log_z = Vec::with_capacity(species);
    for k in 1..=k_max {
        let r = c / (k as f64).powi(3);
        let ln_z = (r / scale).ln() + (k as f64) * p;
        if ln_z > 709.0 {
            // z_k = e^{kp} rho_k / (1-sigma) outgrows f64 around here.
            return Err(Error::DomainError(format!(
                "activity of species {k} (log z = {ln_z:.1}) overflows f64; \
                 lower c or the truncation rank"
            )));
        }
        log_z.push(ln_z);
        activities.push((k as f64, ln_z.exp()));
    }
    let model = ActivityModel::finite(EnsembleKind::Continuous, &activities)?;
    let activity_criterion = exact_criterion(&model)?;
    let log_z_over_k = log_z
        .iter()
        .enumerate()
        .map(|(i, &l)| (i + 1, l / (i + 1) as f64))
        .collect();
    // Richardson-extrapolated consecutive ratios: with d_k = log z_k -
    // log z_{k-1}, the combination k d_k - (k-1) d_{k-1} removes the
    // log-k correction and approaches p like 1/k².
    let mut growth_rate = Vec::new();
    for k in 3..=species {
        let d_k = log_z[k - 1] - log_z[k - 2];
        let d_prev = log_z[k - 2] - log_z[k - 3];
        let kf = k as f64;
        growth_rate.push((k, kf * d_k - (kf - 1.0) * d_prev));
    }
    Ok(DomainSeparationReport {
        c,
        species,
        occupied_fraction: occupied,
        total_number,
        sum_tail_bounds: (c * e3, c * e2),
        in_virial_domain: occupied < 1.0,
        pressure: p,
        activity_criterion,
        log_z_over_k,
        growth_rate,
    })
}
