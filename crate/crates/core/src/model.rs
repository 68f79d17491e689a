//! Activity models: rod-length/activity families and the series
//! g(θ) = Σ_k z_k e^{θ ℓ_k} with certified evaluation.
//!
//! Everything downstream (regime classification, pressure, expansions,
//! finite-volume oracles) consumes an [`ActivityModel`]. Evaluations of
//! g and its first two derivatives return an enclosure `[value, value+bound]`
//! rather than a bare float, so that comparisons at the abscissa of
//! convergence can be decided honestly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which ensemble the rods live in.
///
/// On the lattice the rod of species k occupies k consecutive sites, so
/// discrete models require integer lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Continuous,
    Discrete,
}

/// One species of a finite activity list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub length: f64,
    pub z: f64,
}

/// The supported activity families.
///
/// All four have a computable abscissa of convergence and certified tail
/// bounds; arbitrary user callbacks are deliberately not supported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Family {
    /// Finitely many species (ℓ_k, z_k). Lengths need not be distinct.
    Finite { entries: Vec<Entry> },
    /// Lattice lengths ℓ_k = k with z_k = C k^{-β} e^{-κ k}.
    PowerLawExp {
        #[serde(rename = "C")]
        c: f64,
        beta: f64,
        kappa: f64,
    },
    /// Lattice lengths ℓ_k = k with z_k = e^{kμ - √k}.
    StretchedExp { mu: f64 },
    /// Another family with every activity multiplied by t ≥ 0.
    Scaled { t: f64, base: Box<Family> },
}

#[derive(Deserialize)]
struct RawModel {
    kind: EnsembleKind,
    family: Family,
}

/// A validated activity model: an ensemble kind plus an activity family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ActivityModel {
    kind: EnsembleKind,
    family: Family,
}

impl TryFrom<RawModel> for ActivityModel {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        ActivityModel::new(raw.kind, raw.family)
    }
}

/// Partial sum of a series together with a certified remainder bound:
/// the true value lies in `[value, value + bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub value: f64,
    pub bound: f64,
    pub terms_used: u64,
}

impl TailBound {
    pub fn exact(value: f64) -> Self {
        TailBound { value, bound: 0.0, terms_used: 0 }
    }

    /// Upper end of the enclosure.
    pub fn upper(&self) -> f64 {
        self.value + self.bound
    }
}

/// A boundary limit lim_{θ↗θ*} g^{(m)}(θ): either a certified finite value
/// or provably divergent.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Finite(TailBound),
    Divergent,
}

impl Boundary {
    pub fn as_f64(&self) -> f64 {
        match self {
            Boundary::Finite(tb) => tb.value,
            Boundary::Divergent => f64::INFINITY,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Boundary::Divergent)
    }
}

/// Default tolerance requested from the adaptive tail-bound routines.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Hard cap on the number of series terms one evaluation may sum. When the
/// cap is reached the enclosure is returned with whatever bound was achieved,
/// which is still certified, just wider than requested.
const TERM_CAP: u64 = 1 << 22;

impl ActivityModel {
    pub fn new(kind: EnsembleKind, family: Family) -> Result<Self> {
        let family = validate(kind, family)?;
        Ok(ActivityModel { kind, family })
    }

    pub fn continuous(family: Family) -> Result<Self> {
        Self::new(EnsembleKind::Continuous, family)
    }

    pub fn discrete(family: Family) -> Result<Self> {
        Self::new(EnsembleKind::Discrete, family)
    }

    /// Finite list shorthand used heavily in tests.
    pub fn finite(kind: EnsembleKind, pairs: &[(f64, f64)]) -> Result<Self> {
        let entries = pairs.iter().map(|&(length, z)| Entry { length, z }).collect();
        Self::new(kind, Family::Finite { entries })
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// True when every activity vanishes.
    pub fn is_identically_zero(&self) -> bool {
        family_is_zero(&self.family)
    }

    /// The abscissa of convergence θ* = sup{θ : g(θ) < ∞}.
    ///
    /// `+∞` for finite lists and for identically-zero families.
    pub fn abscissa(&self) -> f64 {
        family_abscissa(&self.family)
    }

    /// Σ z_k over zero-length species (they contribute a constant to g).
    pub fn zero_length_activity(&self) -> f64 {
        match resolve_finite(&self.family, 1.0) {
            Some(entries) => entries.iter().filter(|e| e.length == 0.0).map(|e| e.z).sum(),
            None => 0.0,
        }
    }

    /// The effective finite list (lengths, activities) when the family is a
    /// finite list, with any `Scaled` wrappers folded in. `None` for the
    /// parametric infinite families.
    pub fn finite_entries(&self) -> Option<Vec<Entry>> {
        resolve_finite(&self.family, 1.0)
    }

    /// Length and activity of species `idx` (0-based). For finite lists the
    /// index addresses the retained entries; for the parametric lattice
    /// families species `idx` is the rod of length `idx + 1`.
    pub fn species(&self, idx: usize) -> Option<Entry> {
        fn go(family: &Family, idx: usize, scale: f64) -> Option<Entry> {
            match family {
                Family::Finite { entries } => entries
                    .get(idx)
                    .map(|e| Entry { length: e.length, z: scale * e.z }),
                Family::PowerLawExp { c, beta, kappa } => {
                    let k = (idx + 1) as f64;
                    Some(Entry { length: k, z: scale * c * k.powf(-beta) * (-kappa * k).exp() })
                }
                Family::StretchedExp { mu } => {
                    let k = (idx + 1) as f64;
                    Some(Entry { length: k, z: scale * (k * mu - k.sqrt()).exp() })
                }
                Family::Scaled { t, base } => {
                    if *t == 0.0 {
                        None
                    } else {
                        go(base, idx, scale * t)
                    }
                }
            }
        }
        go(&self.family, idx, 1.0)
    }

    /// g^{(order)}(θ) = Σ_k ℓ_k^order z_k e^{θ ℓ_k} with the default tolerance.
    pub fn eval_g(&self, theta: f64, order: u8) -> Result<TailBound> {
        self.eval_g_tol(theta, order, DEFAULT_TOL)
    }

    /// Same as [`eval_g`](Self::eval_g) with an explicit tolerance request.
    pub fn eval_g_tol(&self, theta: f64, order: u8, tol: f64) -> Result<TailBound> {
        if order > 2 {
            return Err(Error::DomainError(format!(
                "derivative order {order} not supported (0, 1, 2)"
            )));
        }
        if !theta.is_finite() {
            return Err(Error::DomainError(format!("theta = {theta} must be finite")));
        }
        eval_family(&self.family, theta, order, tol)
    }

    /// Boundary limits (g(θ*), g'(θ*)), each certified or flagged divergent.
    pub fn boundary_values(&self) -> Result<(Boundary, Boundary)> {
        let theta_star = self.abscissa();
        if theta_star.is_infinite() {
            return Err(Error::InfiniteAbscissa);
        }
        Ok((
            boundary_family(&self.family, theta_star, 0, DEFAULT_TOL),
            boundary_family(&self.family, theta_star, 1, DEFAULT_TOL),
        ))
    }

    /// The stability condition: some θ gives g(θ) < ∞. All four families
    /// satisfy it whenever their parameters are finite, which `new` enforces,
    /// so this never fails for a constructed model.
    pub fn check_stability(&self) -> Result<()> {
        Ok(())
    }
}

fn validate(kind: EnsembleKind, family: Family) -> Result<Family> {
    let check_finite = |x: f64, what: &str| -> Result<()> {
        if x.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("{what} = {x} is not finite")))
        }
    };
    match family {
        Family::Finite { entries } => {
            let mut kept = Vec::with_capacity(entries.len());
            for e in entries {
                check_finite(e.length, "length")?;
                check_finite(e.z, "activity")?;
                if e.z < 0.0 {
                    return Err(Error::InvalidModel(format!("activity {} < 0", e.z)));
                }
                if e.length < 0.0 {
                    return Err(Error::InvalidModel(format!("length {} < 0", e.length)));
                }
                if kind == EnsembleKind::Discrete
                    && (e.length < 1.0 || e.length.fract() != 0.0)
                {
                    return Err(Error::InvalidModel(format!(
                        "discrete length {} must be a positive integer",
                        e.length
                    )));
                }
                // Species with zero activity are dropped.
                if e.z > 0.0 {
                    kept.push(e);
                }
            }
            Ok(Family::Finite { entries: kept })
        }
        Family::PowerLawExp { c, beta, kappa } => {
            check_finite(c, "C")?;
            check_finite(beta, "beta")?;
            check_finite(kappa, "kappa")?;
            if c < 0.0 {
                return Err(Error::InvalidModel(format!("C = {c} < 0")));
            }
            Ok(Family::PowerLawExp { c, beta, kappa })
        }
        Family::StretchedExp { mu } => {
            check_finite(mu, "mu")?;
            Ok(Family::StretchedExp { mu })
        }
        Family::Scaled { t, base } => {
            check_finite(t, "t")?;
            if t < 0.0 {
                return Err(Error::InvalidModel(format!("t = {t} < 0")));
            }
            let base = validate(kind, *base)?;
            Ok(Family::Scaled { t, base: Box::new(base) })
        }
    }
}

fn family_is_zero(family: &Family) -> bool {
    match family {
        Family::Finite { entries } => entries.is_empty(),
        Family::PowerLawExp { c, .. } => *c == 0.0,
        Family::StretchedExp { .. } => false,
        Family::Scaled { t, base } => *t == 0.0 || family_is_zero(base),
    }
}

fn family_abscissa(family: &Family) -> f64 {
    if family_is_zero(family) {
        return f64::INFINITY;
    }
    match family {
        Family::Finite { .. } => f64::INFINITY,
        Family::PowerLawExp { kappa, .. } => *kappa,
        Family::StretchedExp { mu } => -mu,
        Family::Scaled { base, .. } => family_abscissa(base),
    }
}

fn resolve_finite(family: &Family, scale: f64) -> Option<Vec<Entry>> {
    match family {
        Family::Finite { entries } => Some(
            entries
                .iter()
                .map(|e| Entry { length: e.length, z: scale * e.z })
                .collect(),
        ),
        Family::Scaled { t, base } => {
            if *t == 0.0 {
                Some(Vec::new())
            } else {
                resolve_finite(base, scale * t)
            }
        }
        _ => None,
    }
}

/// Does g^{(order)} converge at θ = θ*?
fn boundary_converges(family: &Family, order: u8) -> bool {
    match family {
        Family::Finite { .. } => true,
        Family::PowerLawExp { beta, .. } => beta - f64::from(order) > 1.0,
        Family::StretchedExp { .. } => true,
        Family::Scaled { base, .. } => boundary_converges(base, order),
    }
}

fn boundary_family(family: &Family, theta_star: f64, order: u8, tol: f64) -> Boundary {
    if family_is_zero(family) {
        return Boundary::Finite(TailBound::exact(0.0));
    }
    if !boundary_converges(family, order) {
        return Boundary::Divergent;
    }
    match eval_family(family, theta_star, order, tol) {
        Ok(tb) => Boundary::Finite(tb),
        Err(_) => Boundary::Divergent,
    }
}

fn eval_family(family: &Family, theta: f64, order: u8, tol: f64) -> Result<TailBound> {
    match family {
        Family::Finite { entries } => {
            // Exact finite sum; treated as exact per the module contract.
            let m = i32::from(order);
            let mut sum = 0.0;
            for e in entries {
                sum += e.z * e.length.powi(m) * (theta * e.length).exp();
            }
            Ok(TailBound { value: sum, bound: 0.0, terms_used: entries.len() as u64 })
        }
        Family::PowerLawExp { c, beta, kappa } => {
            if *c == 0.0 {
                return Ok(TailBound::exact(0.0));
            }
            let res = power_law_sum(*c, *beta, *kappa, theta, order, tol)?;
            Ok(res)
        }
        Family::StretchedExp { mu } => stretched_sum(*mu, theta, order, tol),
        Family::Scaled { t, base } => {
            if *t == 0.0 {
                return Ok(TailBound::exact(0.0));
            }
            let tb = eval_family(base, theta, order, tol / t.max(1.0))?;
            Ok(TailBound {
                value: t * tb.value,
                bound: t * tb.bound,
                terms_used: tb.terms_used,
            })
        }
    }
}

/// Kahan-compensated accumulator.
#[derive(Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Fold floating-point slop into the enclosure so that
/// `[value, value + bound]` still contains the true value.
fn enclose(sum: f64, tail: f64, terms: u64) -> TailBound {
    let slop = 4.0 * f64::EPSILON * sum.abs();
    TailBound { value: sum - slop, bound: tail + 2.0 * slop, terms_used: terms }
}

/// Σ_k c k^{order-β} e^{(θ-κ)k} with certified tail.
fn power_law_sum(c: f64, beta: f64, kappa: f64, theta: f64, order: u8, tol: f64) -> Result<TailBound> {
    let delta = kappa - theta;
    let p = f64::from(order) - beta; // term exponent: k^p r^k
    if delta < 0.0 {
        return Err(Error::DivergentSeries { theta });
    }
    if delta == 0.0 {
        // Boundary: Σ c k^p, a p-series. Converges iff p < -1.
        if p >= -1.0 {
            return Err(Error::DivergentSeries { theta });
        }
        let s = -p; // Σ k^{-s}, s > 1
        let mut acc = Kahan::default();
        let mut k = 1u64;
        loop {
            acc.add((k as f64).powf(-s));
            // Integral enclosure of the tail beyond k.
            let upper = (k as f64).powf(1.0 - s) / (s - 1.0);
            let lower = ((k + 1) as f64).powf(1.0 - s) / (s - 1.0);
            if c * (upper - lower) <= tol || k >= TERM_CAP {
                let value = c * (acc.sum + lower);
                return Ok(enclose(value, c * (upper - lower), k));
            }
            k += 1;
        }
    }
    // Interior: terms t_k = c k^p r^k with r = e^{-delta} < 1.
    let r = (-delta).exp();
    let term = |k: u64| c * (k as f64).powf(p) * (-delta * k as f64).exp();
    let mut acc = Kahan::default();
    let mut k = 1u64;
    loop {
        acc.add(term(k));
        // Geometric majorant: for j > k the term ratio is at most
        // r ((k+1)/k)^{max(p,0)}.
        let q = r * ((k as f64 + 1.0) / k as f64).powf(p.max(0.0));
        if q < 1.0 {
            let tail = term(k + 1) / (1.0 - q);
            if tail <= tol || k >= TERM_CAP {
                return Ok(enclose(acc.sum, tail, k));
            }
        }
        k += 1;
        if k > TERM_CAP {
            // Unreachable in practice: q < 1 holds long before the cap.
            return Ok(enclose(acc.sum, f64::INFINITY, k));
        }
    }
}

/// Σ_k k^order e^{(θ+μ)k - √k} with certified tail.
///
/// For θ ≤ θ* = -μ every term is at most k^order e^{-√k}, and the integral
/// ∫_K^∞ x^m e^{-√x} dx has the closed form 2 e^{-u} Σ_{j≤2m+1} (2m+1)!/j! u^j
/// at u = √K, valid once the integrand is decreasing (K > 4m²).
fn stretched_sum(mu: f64, theta: f64, order: u8, tol: f64) -> Result<TailBound> {
    let shift = theta + mu; // exponent coefficient; must be ≤ 0
    if shift > 0.0 {
        return Err(Error::DivergentSeries { theta });
    }
    let m = f64::from(order);
    let term = |k: u64| {
        let kf = k as f64;
        kf.powf(m) * (shift * kf - kf.sqrt()).exp()
    };
    let tail_integral = |k: u64| {
        let u = (k as f64).sqrt();
        // 2 e^{-u} Σ_{j=0}^{2m+1} ((2m+1)!/j!) u^j
        let top = 2 * u32::from(order) + 1;
        let mut coeff = 1.0; // (2m+1)!/j! for j = top down to 0
        let mut poly = 0.0;
        let mut uj = u.powi(top as i32);
        for j in (0..=top).rev() {
            poly += coeff * uj;
            coeff *= f64::from(j); // moving j -> j-1 multiplies by j
            uj /= u;
        }
        2.0 * (-u).exp() * poly
    };
    let min_k = (4 * u32::from(order) * u32::from(order) + 1) as u64;
    let mut acc = Kahan::default();
    let mut k = 1u64;
    loop {
        acc.add(term(k));
        if k >= min_k {
            // For shift < 0 every tail term also carries e^{shift j} ≤
            // e^{shift (k+1)}, which sharpens the bound considerably.
            let tail = (shift * (k as f64 + 1.0)).exp() * tail_integral(k);
            if tail <= tol || k >= TERM_CAP {
                return Ok(enclose(acc.sum, tail, k));
            }
        }
        k += 1;
    }
}
