//! Exact finite-volume oracles: the lattice renewal recurrence for Ξ_L, a
//! brute-force configuration enumeration, the continuous canonical partition
//! function, packing-fraction histograms, and the renewal asymptotics check
//! log Ξ_L ≈ p L - log μ.
//!
//! Partition values grow like e^{pL}; the dynamic programs therefore run in
//! exact integer arithmetic (activities are dyadic rationals, so Ξ_L times a
//! power of two is an integer) and logs are extracted from the big integers
//! at the end. A floating-point recomputation in renewal-rescaled variables
//! cross-checks the exact DP in the tests.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::bignum::{f64_to_dyadic, ln_ratio, ratio_to_f64};
use crate::error::{Error, Result};
use crate::expansions::{rational_from_f64, MultiIndex};
use crate::model::{ActivityModel, EnsembleKind, Entry};
use crate::regime::{classify, pressure, Regime};

/// Exact (or certified-truncated) finite-volume partition function value.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionValue {
    /// The volume L (an integer for lattice systems).
    pub volume: f64,
    /// Ξ_L as an exact rational; always ≥ 1.
    pub value: BigRational,
    /// Certified remainder when a degree cap truncated the continuous sum;
    /// 0 for the exact discrete recurrences.
    pub truncation_bound: f64,
}

impl PartitionValue {
    /// log Ξ_L, accurate to ~1e-11 even when Ξ_L overflows f64.
    pub fn ln(&self) -> f64 {
        ln_ratio(&self.value)
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.value)
    }
}

/// Packing-fraction distribution at finite volume: point masses at the
/// realizable σ values, normalized to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingHistogram {
    pub volume: f64,
    /// (σ, mass) sorted by σ.
    pub points: Vec<(f64, f64)>,
}

impl PackingHistogram {
    pub fn total_mass(&self) -> f64 {
        self.points.iter().map(|&(_, m)| m).sum()
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().map(|&(s, m)| s * m).sum()
    }

    /// Mass at |σ - center| > eps.
    pub fn tail_mass_outside(&self, center: f64, eps: f64) -> f64 {
        self.points
            .iter()
            .filter(|&&(s, _)| (s - center).abs() > eps)
            .map(|&(_, m)| m)
            .sum()
    }
}

/// Dense activity table for a discrete finite list: `z[k-1]` is the total
/// activity of rods of length k (duplicate lengths merged).
fn discrete_activities(model: &ActivityModel) -> Result<Vec<f64>> {
    if model.kind() != EnsembleKind::Discrete {
        return Err(Error::DomainError(
            "finite-volume lattice oracles need a discrete model".into(),
        ));
    }
    let entries = model.finite_entries().ok_or_else(|| {
        Error::DomainError("finite-volume oracles need finitely many species".into())
    })?;
    let k_max = entries.iter().map(|e| e.length as usize).max().unwrap_or(0);
    let mut z = vec![0.0; k_max];
    for e in entries {
        z[e.length as usize - 1] += e.z;
    }
    Ok(z)
}

/// Activities as scaled integers: z_k = ints[k-1] / 2^shift.
struct DyadicActivities {
    ints: Vec<BigUint>,
    shift: u64,
}

impl DyadicActivities {
    fn build(z: &[f64]) -> Self {
        let parts: Vec<(BigUint, u64)> = z.iter().map(|&v| f64_to_dyadic(v)).collect();
        let shift = parts.iter().map(|&(_, e)| e).max().unwrap_or(0);
        let ints = parts
            .into_iter()
            .map(|(num, e)| num << (shift - e))
            .collect();
        DyadicActivities { ints, shift }
    }
}

/// Largest lattice volume the recurrence will accept in one call.
pub const LATTICE_VOLUME_CAP: u64 = 1_000_000;

/// Ξ_L on the lattice via the renewal recurrence, in exact arithmetic:
/// Ξ_0 = 1, Ξ_L = (1+z_1) Ξ_{L-1} + Σ_{k=2}^{L} z_k Ξ_{L-k}.
///
/// (The k = L summand carries Ξ_0 = 1, which is where the lone rod covering
/// the whole box enters.)
pub fn xi_discrete(model: &ActivityModel, volume: u64) -> Result<PartitionValue> {
    let z = discrete_activities(model)?;
    let dy = DyadicActivities::build(&z);
    let v = xi_scaled_at(&dy, &[volume])?.pop().expect("one volume requested");
    Ok(partition_from_scaled(volume, v, dy.shift))
}

/// Scale-aligned recurrence coefficients: b_1 = 2^s + a_1 folds the empty
/// site and the monomer together; b_k = a_k 2^{s(k-1)} aligns the scales of
/// rows l and l-k.
fn scaled_coefficients(dy: &DyadicActivities) -> Vec<BigUint> {
    let s = dy.shift;
    let two_s = BigUint::one() << s;
    let mut coeff: Vec<BigUint> = Vec::with_capacity(dy.ints.len().max(1));
    for (i, a) in dy.ints.iter().enumerate() {
        if i == 0 {
            coeff.push(&two_s + a);
        } else {
            coeff.push(a << (s * i as u64));
        }
    }
    if coeff.is_empty() {
        coeff.push(two_s); // no species at all: Ξ_L = 1
    }
    coeff
}

/// Scaled values V_L = 2^{shift·L} Ξ_L at the requested volumes (ascending),
/// keeping only a window of max-species-length rows in memory.
fn xi_scaled_at(dy: &DyadicActivities, volumes: &[u64]) -> Result<Vec<BigUint>> {
    let max_l = volumes.iter().copied().max().unwrap_or(0);
    if max_l > LATTICE_VOLUME_CAP {
        return Err(Error::CapExceeded {
            what: "lattice volume",
            requested: max_l as usize,
            limit: LATTICE_VOLUME_CAP as usize,
        });
    }
    debug_assert!(volumes.windows(2).all(|w| w[0] <= w[1]));
    let coeff = scaled_coefficients(dy);
    let k_max = coeff.len();
    let mut window: std::collections::VecDeque<BigUint> = [BigUint::one()].into();
    let mut out = Vec::with_capacity(volumes.len());
    let mut next = volumes.iter().peekable();
    while let Some(&&want) = next.peek() {
        if want == 0 {
            out.push(BigUint::one());
            next.next();
            continue;
        }
        break;
    }
    for l in 1..=max_l {
        // window holds rows l-window.len() ..= l-1, back = l-1
        let mut v = &coeff[0] * &window[window.len() - 1];
        for (i, c) in coeff.iter().enumerate().skip(1) {
            let k = (i + 1) as u64;
            if k > l {
                break;
            }
            v += c * &window[window.len() - k as usize];
        }
        if window.len() > k_max {
            window.pop_front();
        }
        window.push_back(v);
        while next.peek() == Some(&&l) {
            out.push(window[window.len() - 1].clone());
            next.next();
        }
    }
    Ok(out)
}

fn partition_from_scaled(volume: u64, scaled: BigUint, shift: u64) -> PartitionValue {
    let value = BigRational::new(
        BigInt::from(scaled),
        BigInt::from(BigUint::one() << (shift * volume)),
    );
    PartitionValue { volume: volume as f64, value, truncation_bound: 0.0 }
}

/// Cap on the brute-force volume (the enumeration is exponential in L).
pub const BRUTE_FORCE_VOLUME_CAP: u64 = 22;

/// Ξ_L by explicit enumeration of every non-overlapping configuration,
/// summing the activity product of each placement. Exact; L ≤ 22.
pub fn xi_discrete_bruteforce(model: &ActivityModel, volume: u64) -> Result<PartitionValue> {
    if volume > BRUTE_FORCE_VOLUME_CAP {
        return Err(Error::CapExceeded {
            what: "brute-force volume",
            requested: volume as usize,
            limit: BRUTE_FORCE_VOLUME_CAP as usize,
        });
    }
    let z = discrete_activities(model)?;
    let dy = DyadicActivities::build(&z);
    let s = dy.shift;
    // Weights are accumulated in units of 2^{-s·volume}: a configuration
    // with rods k_1..k_m contributes (Π a_{k_i}) << s(volume - m).
    fn walk(
        pos: u64,
        volume: u64,
        rods: u64,
        weight: &BigUint,
        ints: &[BigUint],
        shift: u64,
        acc: &mut BigUint,
    ) {
        if pos == volume {
            *acc += weight << (shift * (volume - rods));
            return;
        }
        // empty site
        walk(pos + 1, volume, rods, weight, ints, shift, acc);
        for (i, a) in ints.iter().enumerate() {
            let k = (i + 1) as u64;
            if a.is_zero() || pos + k > volume {
                continue;
            }
            let w = weight * a;
            walk(pos + k, volume, rods + 1, &w, ints, shift, acc);
        }
    }
    let mut acc = BigUint::zero();
    walk(0, volume, 0, &BigUint::one(), &dy.ints, s, &mut acc);
    Ok(partition_from_scaled(volume, acc, s))
}

/// Canonical partition function of a continuous multi-index at volume L:
/// (L - Σ N_k ℓ_k)^{Σ N_k} / Π N_k! when the rods fit, else 0.
pub fn canonical_z_continuous(
    n: &MultiIndex,
    lengths: &[BigRational],
    volume: &BigRational,
) -> Result<BigRational> {
    let slack = volume - n.total_length(lengths)?;
    if slack < BigRational::zero() {
        return Ok(BigRational::zero());
    }
    let m = n.order();
    let mut p = BigRational::one();
    for _ in 0..m {
        p *= &slack;
    }
    Ok(p / BigRational::from_integer(n.factorial_product()))
}

/// Continuous finite list resolved to exact-rational lengths and dyadic
/// activities, rejecting zero-length species.
fn continuous_entries(model: &ActivityModel) -> Result<Vec<Entry>> {
    if model.kind() != EnsembleKind::Continuous {
        return Err(Error::DomainError(
            "continuous finite-volume sums need a continuous model".into(),
        ));
    }
    let entries = model.finite_entries().ok_or_else(|| {
        Error::DomainError("finite-volume oracles need finitely many species".into())
    })?;
    if entries.iter().any(|e| e.length == 0.0) {
        return Err(Error::ZeroLengthSpecies);
    }
    Ok(entries)
}

const CONTINUOUS_TERM_CAP: u64 = 5_000_000;

/// Strata of the continuous finite-volume sum: occupied length S → total
/// weight Σ z^N Z_L(N) over multi-indices with Σ N ℓ = S. Includes the
/// empty stratum S = 0 with weight 1. `degree_cap` limits Σ N_k.
fn continuous_strata(
    model: &ActivityModel,
    volume: f64,
    degree_cap: Option<u32>,
) -> Result<(BTreeMap<BigRational, BigRational>, f64)> {
    let entries = continuous_entries(model)?;
    if volume <= 0.0 || !volume.is_finite() {
        return Err(Error::DomainError(format!("volume {volume} must be positive")));
    }
    let vol = rational_from_f64(volume)?;
    let l_min = entries.iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
    let d_full = if entries.is_empty() { 0 } else { (volume / l_min).floor() as u64 };
    let cap = degree_cap.map_or(d_full, |c| u64::from(c).min(d_full));
    let lengths: Vec<BigRational> =
        entries.iter().map(|e| rational_from_f64(e.length)).collect::<Result<_>>()?;
    let acts: Vec<BigRational> =
        entries.iter().map(|e| rational_from_f64(e.z)).collect::<Result<_>>()?;

    let mut strata: BTreeMap<BigRational, BigRational> = BTreeMap::new();
    strata.insert(BigRational::zero(), BigRational::one());
    // Depth-first over species counts with a remaining-length budget, and
    // weight z^N / Π N_k! built incrementally; slack^M enters per stratum.
    struct Frame<'a> {
        lengths: &'a [BigRational],
        acts: &'a [BigRational],
        vol: &'a BigRational,
        cap: u64,
        terms: u64,
        strata: BTreeMap<BigRational, BigRational>,
    }
    fn descend(
        f: &mut Frame<'_>,
        species: usize,
        used: BigRational,
        order: u64,
        weight: BigRational,
    ) -> Result<()> {
        if species == f.lengths.len() {
            if order == 0 {
                return Ok(()); // empty index already seeded
            }
            f.terms += 1;
            if f.terms > CONTINUOUS_TERM_CAP {
                return Err(Error::CapExceeded {
                    what: "continuous partition terms",
                    requested: f.terms as usize,
                    limit: CONTINUOUS_TERM_CAP as usize,
                });
            }
            let slack = f.vol - &used;
            let mut pow = BigRational::one();
            for _ in 0..order {
                pow *= &slack;
            }
            let w = weight * pow;
            *f.strata.entry(used).or_insert_with(BigRational::zero) += w;
            return Ok(());
        }
        let mut count = 0u64;
        let mut used_here = used.clone();
        let mut weight_here = weight.clone();
        loop {
            if order + count <= f.cap && &used_here <= f.vol {
                descend(f, species + 1, used_here.clone(), order + count, weight_here.clone())?;
            } else {
                break;
            }
            count += 1;
            used_here += &f.lengths[species];
            weight_here = weight_here * &f.acts[species]
                / BigRational::from_integer(BigInt::from(count));
            if &used_here > f.vol || order + count > f.cap {
                break;
            }
        }
        Ok(())
    }
    let mut frame = Frame {
        lengths: &lengths,
        acts: &acts,
        vol: &vol,
        cap,
        terms: 0,
        strata,
    };
    descend(&mut frame, 0, BigRational::zero(), 0, BigRational::one())?;
    // Truncation bound when the degree cap bites: Σ_{M>D} (L Σz)^M / M!.
    let bound = if cap < d_full {
        let x = volume * entries.iter().map(|e| e.z).sum::<f64>();
        let d = cap as f64;
        // (x^{D+1}/(D+1)!) e^x, in logs to dodge overflow.
        let ln_b = (d + 1.0) * x.ln() - ln_factorial(cap + 1) + x;
        ln_b.exp()
    } else {
        0.0
    };
    Ok((frame.strata, bound))
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Ξ_L for a continuous finite list: the exact finite sum over all feasible
/// multi-indices (the geometric constraint Σ N ℓ ≤ L makes it finite).
/// `degree_cap` optionally truncates Σ N_k; the returned bound certifies
/// the omitted part (0 when nothing was omitted).
pub fn xi_continuous(
    model: &ActivityModel,
    volume: f64,
    degree_cap: Option<u32>,
) -> Result<PartitionValue> {
    let (strata, bound) = continuous_strata(model, volume, degree_cap)?;
    let value = strata.values().fold(BigRational::zero(), |a, b| a + b);
    Ok(PartitionValue { volume, value, truncation_bound: bound })
}

/// Grand-canonical distribution of the packing fraction σ = S/L at volume L.
///
/// Discrete finite lists use an exact two-dimensional dynamic program over
/// (position, occupied length); continuous finite lists use the stratified
/// exact sums. Masses are exact ratios converted to f64 at the end.
pub fn packing_distribution(model: &ActivityModel, volume: f64) -> Result<PackingHistogram> {
    match model.kind() {
        EnsembleKind::Discrete => {
            if volume < 0.0 || volume.fract() != 0.0 {
                return Err(Error::DomainError(format!(
                    "lattice volume {volume} must be a non-negative integer"
                )));
            }
            packing_distribution_discrete(model, volume as u64)
        }
        EnsembleKind::Continuous => packing_distribution_continuous(model, volume),
    }
}

fn packing_distribution_discrete(model: &ActivityModel, volume: u64) -> Result<PackingHistogram> {
    if volume > LATTICE_VOLUME_CAP {
        return Err(Error::CapExceeded {
            what: "lattice volume",
            requested: volume as usize,
            limit: LATTICE_VOLUME_CAP as usize,
        });
    }
    let z = discrete_activities(model)?;
    let dy = DyadicActivities::build(&z);
    let s = dy.shift;
    let two_s = BigUint::one() << s;
    let l = volume as usize;
    // coeff[k-1] scaled as in the 1-D recurrence; the empty site is handled
    // separately here since it does not change S.
    let coeff: Vec<BigUint> = dy
        .ints
        .iter()
        .enumerate()
        .map(|(i, a)| a << (s * i as u64))
        .collect();
    let k_max = coeff.len().max(1);
    // W_l[S] = 2^{s·l} · (weight of configurations of {0..l-1} with S
    // occupied sites). Only the last k_max rows are ever read.
    let mut window: std::collections::VecDeque<Vec<BigUint>> =
        [vec![BigUint::one()]].into();
    for cur in 1..=l {
        let mut row = vec![BigUint::zero(); cur + 1];
        let prev = &window[window.len() - 1];
        for (sites, v) in prev.iter().enumerate() {
            if !v.is_zero() {
                row[sites] += v * &two_s;
            }
        }
        for (i, c) in coeff.iter().enumerate() {
            let k = i + 1;
            if c.is_zero() || k > cur {
                continue;
            }
            for (sites, v) in window[window.len() - k].iter().enumerate() {
                if !v.is_zero() {
                    row[sites + k] += v * c;
                }
            }
        }
        if window.len() > k_max {
            window.pop_front();
        }
        window.push_back(row);
    }
    let last = &window[window.len() - 1];
    let total: BigUint = last.iter().cloned().sum();
    let points = last
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(sites, w)| {
            let sigma = if l == 0 { 0.0 } else { sites as f64 / l as f64 };
            (sigma, big_div(w, &total))
        })
        .collect();
    Ok(PackingHistogram { volume: volume as f64, points })
}

fn big_div(num: &BigUint, den: &BigUint) -> f64 {
    ratio_to_f64(&BigRational::new(
        BigInt::from(num.clone()),
        BigInt::from(den.clone()),
    ))
}

fn packing_distribution_continuous(model: &ActivityModel, volume: f64) -> Result<PackingHistogram> {
    let (strata, _) = continuous_strata(model, volume, None)?;
    let total = strata.values().fold(BigRational::zero(), |a, b| a + b);
    let vol = rational_from_f64(volume)?;
    let points = strata
        .iter()
        .map(|(s_occ, w)| {
            let sigma = ratio_to_f64(&(s_occ / &vol));
            (sigma, ratio_to_f64(&(w / &total)))
        })
        .collect();
    Ok(PackingHistogram { volume, points })
}

/// Renewal asymptotics report: ε(L) = |log Ξ_L - p L + log μ| per volume,
/// with μ = (1+z_1) ξ + Σ_{k≥2} k z_k ξ^k at ξ = e^{-p}.
#[derive(Debug, Clone)]
pub struct RenewalReport {
    pub p: f64,
    pub log_mu: f64,
    /// (L, ε(L)) in the order requested.
    pub rows: Vec<(u64, f64)>,
    /// sup of ε over the largest half of the requested volumes.
    pub sup_tail: f64,
    /// Least-squares slope of log ε against L (negative = geometric decay);
    /// `None` when ε hits the numerical floor everywhere.
    pub decay_rate: Option<f64>,
}

/// Run the renewal check for a fluid discrete finite list.
pub fn renewal_asymptotics_check(model: &ActivityModel, volumes: &[u64]) -> Result<RenewalReport> {
    let report = classify(model)?;
    if report.regime != Regime::Fluid {
        return Err(Error::NotFluid("renewal rescaling needs a solvable fixed point"));
    }
    let z = discrete_activities(model)?;
    if volumes.is_empty() {
        return Err(Error::DomainError("need at least one volume".into()));
    }
    let p = pressure(model)?.p;
    let xi = (-p).exp();
    let mut mu = if z.is_empty() { xi } else { (1.0 + z[0]) * xi };
    for (i, &zk) in z.iter().enumerate().skip(1) {
        let k = (i + 1) as f64;
        mu += k * zk * xi.powf(k);
    }
    let log_mu = mu.ln();
    let dy = DyadicActivities::build(&z);
    let mut sorted = volumes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let scaled = xi_scaled_at(&dy, &sorted)?;
    let eps_of: std::collections::BTreeMap<u64, f64> = sorted
        .iter()
        .zip(scaled)
        .map(|(&l, v)| {
            let pv = partition_from_scaled(l, v, dy.shift);
            (l, (pv.ln() - p * l as f64 + log_mu).abs())
        })
        .collect();
    let rows: Vec<(u64, f64)> = volumes.iter().map(|&l| (l, eps_of[&l])).collect();
    let mut sorted = volumes.to_vec();
    sorted.sort_unstable();
    let half = &sorted[sorted.len() / 2..];
    let sup_tail = rows
        .iter()
        .filter(|(l, _)| half.contains(l))
        .map(|&(_, e)| e)
        .fold(0.0, f64::max);
    // Fit log ε against L where ε is meaningfully nonzero.
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|&&(_, e)| e > 1e-300)
        .map(|&(l, e)| (l as f64, e.ln()))
        .collect();
    let decay_rate = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() > 0.0 {
            Some((n * sxy - sx * sy) / denom)
        } else {
            None
        }
    } else {
        None
    };
    Ok(RenewalReport { p, log_mu, rows, sup_tail, decay_rate })
}
