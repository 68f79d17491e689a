//! Multivariate formal power series truncated by total degree, with exact
//! rational coefficients. Just enough machinery to verify that the expansion
//! coefficient formulas solve their functional equations exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::bignum::factorial;
use crate::error::{Error, Result};
use crate::expansions::{activity_coefficient, enumerate_multi_indices, MultiIndex};
use crate::model::EnsembleKind;

/// Power series in `arity` variables, truncated beyond total degree
/// `max_degree`. Absent exponent vectors have coefficient zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedSeries {
    arity: usize,
    max_degree: u32,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl GradedSeries {
    pub fn zero(arity: usize, max_degree: u32) -> Self {
        GradedSeries { arity, max_degree, terms: BTreeMap::new() }
    }

    pub fn constant(arity: usize, max_degree: u32, value: BigRational) -> Self {
        let mut s = Self::zero(arity, max_degree);
        if !value.is_zero() {
            s.terms.insert(vec![0; arity], value);
        }
        s
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> BigRational {
        self.terms.get(exponents).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Largest coefficient magnitude; handy for "residual is zero" asserts.
    pub fn max_abs_coefficient(&self) -> BigRational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// Iterate terms as (MultiIndex, coefficient); the constant term (if
    /// any) is skipped since a MultiIndex is non-empty by construction.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, &BigRational)> + '_ {
        self.terms.iter().filter_map(|(e, c)| {
            MultiIndex::new(e.iter().enumerate().map(|(i, &x)| (i, x)))
                .ok()
                .map(|n| (n, c))
        })
    }

    fn degree_of(exp: &[u32]) -> u32 {
        exp.iter().sum()
    }

    fn insert(&mut self, exp: Vec<u32>, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        debug_assert!(Self::degree_of(&exp) <= self.max_degree);
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        let mut out = Self::zero(self.arity, self.max_degree);
        if factor.is_zero() {
            return out;
        }
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), c * factor);
        }
        out
    }

    /// Product, truncated beyond `max_degree`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity);
        let mut out = Self::zero(self.arity, self.max_degree);
        for (ea, ca) in &self.terms {
            let da = Self::degree_of(ea);
            for (eb, cb) in &other.terms {
                if da + Self::degree_of(eb) > self.max_degree {
                    continue;
                }
                let exp: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(exp, ca * cb);
            }
        }
        out
    }

    /// Multiply by the variable `species` (shifts every exponent up by one).
    pub fn shift_by_variable(&self, species: usize) -> Self {
        assert!(species < self.arity);
        let mut out = Self::zero(self.arity, self.max_degree);
        for (e, c) in &self.terms {
            if Self::degree_of(e) + 1 > self.max_degree {
                continue;
            }
            let mut exp = e.clone();
            exp[species] += 1;
            out.terms.insert(exp, c.clone());
        }
        out
    }

    /// exp(S) = Σ_m S^m / m!, truncated; requires zero constant term so the
    /// sum terminates at m = max_degree.
    pub fn exp(&self) -> Result<Self> {
        if !self.coefficient(&vec![0; self.arity]).is_zero() {
            return Err(Error::DomainError(
                "series exponential requires a vanishing constant term".into(),
            ));
        }
        let mut out = Self::constant(self.arity, self.max_degree, BigRational::one());
        let mut power = Self::constant(self.arity, self.max_degree, BigRational::one());
        for m in 1..=u64::from(self.max_degree) {
            power = power.mul(self);
            if power.is_zero() {
                break;
            }
            let inv_fact = BigRational::new(BigInt::one(), factorial(m));
            out = out.add(&power.scale(&inv_fact));
        }
        Ok(out)
    }
}

/// Build the all-positive formal solution F = Σ |a(n)| z^n of the flipped
/// fixed-point equation, over `lengths.len()` species, up to `degree`.
fn positive_pressure_series(
    kind: EnsembleKind,
    lengths: &[BigRational],
    degree: u32,
) -> Result<GradedSeries> {
    let arity = lengths.len();
    let species: Vec<usize> = (0..arity).collect();
    let mut f = GradedSeries::zero(arity, degree);
    for n in enumerate_multi_indices(&species, degree)? {
        let coeff = activity_coefficient(kind, lengths, &n)?.abs();
        let mut exp = vec![0u32; arity];
        for (k, c) in n.counts() {
            exp[k] = c;
        }
        f.insert(exp, coeff);
    }
    Ok(f)
}

/// Residual of the functional equation satisfied by the all-positive
/// expansion series, as a graded series (identically zero when the
/// coefficient formulas are correct):
///
/// * continuous: F - Σ_k z_k exp(ℓ_k F),
/// * discrete:  exp(F) - 1 - Σ_k z_k exp(ℓ_k F).
///
/// Exact rational arithmetic throughout; lattice lengths must be integers.
pub fn fps_fixed_point_residual(
    kind: EnsembleKind,
    lengths: &[BigRational],
    degree: u32,
) -> Result<GradedSeries> {
    if degree < 1 {
        return Err(Error::DomainError("degree must be >= 1".into()));
    }
    if kind == EnsembleKind::Discrete {
        for l in lengths {
            if !l.is_integer() || !l.is_positive() {
                return Err(Error::DomainError(
                    "discrete lengths must be positive integers".into(),
                ));
            }
        }
    }
    let arity = lengths.len();
    let f = positive_pressure_series(kind, lengths, degree)?;
    let mut rhs = GradedSeries::zero(arity, degree);
    for (k, l) in lengths.iter().enumerate() {
        let exp_lf = f.scale(l).exp()?;
        rhs = rhs.add(&exp_lf.shift_by_variable(k));
    }
    let lhs = match kind {
        EnsembleKind::Continuous => f,
        EnsembleKind::Discrete => {
            let one = GradedSeries::constant(arity, degree, BigRational::one());
            f.exp()?.sub(&one)
        }
    };
    Ok(lhs.sub(&rhs))
}
