//! Activity expansions of the pressure: exact coefficients, truncated
//! evaluation, exact and classical sufficient convergence criteria, a
//! brute-force colored-tree oracle, and formal power-series verification.
//!
//! Coefficients are exact rationals throughout; floating point enters only
//! when a truncated series is evaluated at numeric activities.

mod criteria;
mod series;
mod trees;

pub use criteria::{exact_criterion, sufficient_criteria, CriterionId, CriterionReport};
pub use series::{fps_fixed_point_residual, GradedSeries};
pub use trees::tree_weight_sum;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::bignum::{factorial, falling_factorial, ratio_to_f64};
use crate::error::{Error, Result};
use crate::model::{ActivityModel, EnsembleKind};

/// Sparse multi-index n = (n_k): species index → count ≥ 1.
///
/// Species indices are 0-based positions into a length table (for the
/// parametric lattice families, species i has length i+1).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(BTreeMap<usize, u32>);

impl MultiIndex {
    /// Build from (species, count) pairs; zero counts are dropped and the
    /// result must be non-empty.
    pub fn new<I: IntoIterator<Item = (usize, u32)>>(counts: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, c) in counts {
            if c > 0 {
                *map.entry(k).or_insert(0) += c;
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidIndex);
        }
        Ok(MultiIndex(map))
    }

    pub fn single(species: usize) -> Self {
        MultiIndex(BTreeMap::from([(species, 1)]))
    }

    /// Total order M = Σ n_k.
    pub fn order(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c)).sum()
    }

    /// Total length N_ℓ = Σ n_k ℓ_k.
    pub fn total_length(&self, lengths: &[BigRational]) -> Result<BigRational> {
        let mut total = BigRational::zero();
        for (&k, &c) in &self.0 {
            let l = lengths
                .get(k)
                .ok_or_else(|| Error::DomainError(format!("species {k} out of range")))?;
            total += l * BigRational::from_integer(BigInt::from(c));
        }
        Ok(total)
    }

    /// Π n_k! .
    pub fn factorial_product(&self) -> BigInt {
        let mut acc = BigInt::one();
        for &c in self.0.values() {
            acc *= factorial(u64::from(c));
        }
        acc
    }

    pub fn counts(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0.iter().map(|(&k, &c)| (k, c))
    }

    /// "k:count;..." with 1-based species, as used by the CSV export.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|(&k, &c)| format!("{}:{}", k + 1, c))
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Signed coefficient of z^n in the activity expansion of the pressure.
///
/// Continuous: (-1)^{M-1} N_ℓ^{M-1} / n! .
/// Discrete (integer lengths): (-1)^{M-1} (N-1)!/(N-M)! / n! .
/// Both carry sign (-1)^{M-1}; the discrete magnitude is fixed by the
/// requirement that the monomer case reproduce log(1+z), which the formal
/// power-series oracle certifies.
pub fn activity_coefficient(
    kind: EnsembleKind,
    lengths: &[BigRational],
    n: &MultiIndex,
) -> Result<BigRational> {
    let m = n.order();
    debug_assert!(m >= 1);
    let n_fact = n.factorial_product();
    let magnitude = match kind {
        EnsembleKind::Continuous => {
            let total = n.total_length(lengths)?;
            // N_ℓ^{M-1} with the 0^0 = 1 convention.
            let mut p = BigRational::one();
            for _ in 1..m {
                p *= &total;
            }
            p / BigRational::from_integer(n_fact)
        }
        EnsembleKind::Discrete => {
            let total = n.total_length(lengths)?;
            if !total.is_integer() {
                return Err(Error::DomainError(
                    "discrete coefficients require integer lengths".into(),
                ));
            }
            let total: u64 = total
                .to_integer()
                .try_into()
                .map_err(|_| Error::DomainError("total length out of range".into()))?;
            // lengths ≥ 1 gives N ≥ M; (N-1)!/(N-M)! is the (M-1)-step
            // falling factorial from N-1.
            let num = falling_factorial(total - 1, m - 1);
            BigRational::new(num, n_fact)
        }
    };
    let sign = if m % 2 == 0 { -BigRational::one() } else { BigRational::one() };
    Ok(sign * magnitude)
}

/// All multi-indices over `species` with 1 ≤ order ≤ `degree`, in graded
/// lexicographic order (grade first, then lexicographic on the exponent
/// vector of the given species slice).
pub fn enumerate_multi_indices(species: &[usize], degree: u32) -> Result<Vec<MultiIndex>> {
    if species.is_empty() || degree == 0 {
        return Ok(Vec::new());
    }
    // Index count is C(degree + s, s) - 1; refuse absurd requests.
    let mut estimate = 1f64;
    for i in 1..=species.len() {
        estimate *= (f64::from(degree) + i as f64) / i as f64;
    }
    const CAP: f64 = 2e7;
    if estimate > CAP {
        return Err(Error::CapExceeded {
            what: "multi-index enumeration size",
            requested: estimate as usize,
            limit: CAP as usize,
        });
    }
    let mut out = Vec::new();
    let mut counts = vec![0u32; species.len()];
    for grade in 1..=degree {
        compositions(&mut counts, 0, grade, species, &mut out);
    }
    Ok(out)
}

fn compositions(
    counts: &mut Vec<u32>,
    pos: usize,
    remaining: u32,
    species: &[usize],
    out: &mut Vec<MultiIndex>,
) {
    if pos == species.len() - 1 {
        counts[pos] = remaining;
        let idx = MultiIndex::new(
            counts
                .iter()
                .enumerate()
                .map(|(i, &c)| (species[i], c)),
        )
        .expect("grade >= 1");
        out.push(idx);
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        compositions(counts, pos + 1, remaining - c, species, out);
    }
    counts[pos] = 0;
}

/// Exact rational image of an f64 (f64 values are dyadic rationals).
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::DomainError(format!("{x} has no rational value")))
}

/// Partial sum Σ_{1 ≤ |n| ≤ D} a(n) z^n of the pressure expansion over the
/// given active species, together with the number of terms summed.
///
/// Coefficients are computed exactly and converted to floating point one
/// term at a time; the term values themselves are modest even when the
/// raw coefficients overflow any fixed-precision type.
pub fn truncated_pressure(
    model: &ActivityModel,
    active_species: &[usize],
    degree: u32,
) -> Result<(f64, u64)> {
    if degree < 1 {
        return Err(Error::DomainError("degree must be >= 1".into()));
    }
    let mut lengths = Vec::with_capacity(active_species.len());
    let mut activities = Vec::with_capacity(active_species.len());
    for &s in active_species {
        let e = model.species(s).ok_or_else(|| {
            Error::DomainError(format!("species {s} not present in the model"))
        })?;
        lengths.push(rational_from_f64(e.length)?);
        activities.push(rational_from_f64(e.z)?);
    }
    // active_species are remapped to dense local ids 0..len.
    let local: Vec<usize> = (0..active_species.len()).collect();
    let indices = enumerate_multi_indices(&local, degree)?;
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    let mut terms = 0u64;
    for n in &indices {
        let coeff = activity_coefficient(model.kind(), &lengths, n)?;
        let mut term = coeff;
        for (k, c) in n.counts() {
            for _ in 0..c {
                term *= &activities[k];
            }
        }
        terms += 1;
        // Kahan step keeps the partial sums honest near cancellation.
        let x = ratio_to_f64(&term);
        let y = x - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    Ok((sum, terms))
}

/// CSV table of expansion coefficients over explicit lengths, in graded
/// lexicographic order. Columns: n ("k:count;..."), M, N_ell, numerator,
/// denominator, sign.
pub fn coefficient_table_csv(
    kind: EnsembleKind,
    lengths: &[f64],
    degree: u32,
) -> Result<String> {
    let lens: Vec<BigRational> =
        lengths.iter().map(|&l| rational_from_f64(l)).collect::<Result<_>>()?;
    let species: Vec<usize> = (0..lengths.len()).collect();
    let mut out = String::from("n,M,N_ell,numerator,denominator,sign\n");
    for n in enumerate_multi_indices(&species, degree)? {
        let coeff = activity_coefficient(kind, &lens, &n)?;
        let sign = if coeff.is_negative() { -1 } else { 1 };
        let mag = coeff.abs();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            n.label(),
            n.order(),
            n.total_length(&lens)?,
            mag.numer(),
            mag.denom(),
            sign
        ));
    }
    Ok(out)
}
