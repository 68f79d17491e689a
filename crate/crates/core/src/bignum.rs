//! Conversions between big rationals and floating point that stay accurate
//! for values far outside the `f64` range.
//!
//! The finite-volume partition functions grow like e^{pL} and their exact
//! values are kept as big rationals; what downstream code needs is `ln` of
//! such a value to near machine precision, which the naive
//! `numerator.to_f64() / denominator.to_f64()` route cannot deliver.

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Natural log of a positive big integer, accurate to roughly
/// `1e-16 * bits(x)` absolute error.
pub fn ln_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits in u64") as f64).ln();
    }
    // Top 64 bits as an integer m, so x = m * 2^shift * (1 + eps), eps < 2^-63.
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 bits");
    (top as f64).ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Natural log of a positive rational.
pub fn ln_ratio(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "ln of non-positive rational");
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

/// Rational to f64, correct (up to rounding) even when numerator and
/// denominator individually overflow f64.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let (nb, db) = (num.bits() as i64, den.bits() as i64);
    // Scale both to ~64 bits and track the power of two.
    let take = |x: &BigUint, bits: i64| -> (f64, i64) {
        if bits <= 64 {
            (x.to_f64().unwrap(), 0)
        } else {
            let shift = bits - 64;
            ((x >> (shift as u64)).to_f64().unwrap(), shift)
        }
    };
    let (nm, ns) = take(num, nb);
    let (dm, ds) = take(den, db);
    let e = ns - ds;
    let m = nm / dm;
    if e == 0 {
        return sign * m;
    }
    if e > 1070 {
        return sign * f64::INFINITY;
    }
    if e < -1140 {
        return 0.0;
    }
    // Split the exponent so each powi stays in range.
    let h1 = (e / 2) as i32;
    let h2 = (e - (e / 2)) as i32;
    sign * m * 2f64.powi(h1) * 2f64.powi(h2)
}

/// Exact dyadic decomposition of a finite non-negative f64:
/// returns `(num, exp)` with `z = num / 2^exp` and `exp >= 0` minimal.
pub fn f64_to_dyadic(z: f64) -> (BigUint, u64) {
    assert!(z.is_finite() && z >= 0.0, "dyadic decomposition of {z}");
    let r = BigRational::from_float(z).expect("finite float");
    let den = r.denom().magnitude();
    debug_assert_eq!(den.count_ones(), 1, "f64 denominator is a power of two");
    (r.numer().magnitude().clone(), den.bits() - 1)
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigUint::one();
    for i in 2..=n {
        acc *= i;
    }
    BigInt::from_biguint(Sign::Plus, acc)
}

/// Falling factorial `n (n-1) ... (n-k+1)` = n!/(n-k)!.
pub fn falling_factorial(n: u64, k: u64) -> BigInt {
    assert!(k <= n);
    let mut acc = BigUint::one();
    for i in (n - k + 1)..=n {
        acc *= i;
    }
    BigInt::from_biguint(Sign::Plus, acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    #[test]
    fn ln_of_huge_power() {
        // ln(2^100000) = 100000 ln 2
        let x = BigUint::one() << 100000u32;
        let want = 100000.0 * std::f64::consts::LN_2;
        assert!((ln_biguint(&x) - want).abs() < 1e-9);
    }

    #[test]
    fn ln_around_the_u64_boundary() {
        for bits in [50u32, 53, 54, 60, 63, 64, 65, 70] {
            let x = (BigUint::one() << bits) + BigUint::from(12345u32);
            let want = (bits as f64) * std::f64::consts::LN_2;
            let got = ln_biguint(&x);
            assert!((got - want).abs() < 1e-6, "bits={bits}: {got} vs {want}");
        }
    }

    #[test]
    fn ratio_to_f64_handles_balanced_huge_values() {
        let a = BigInt::from(3) * (BigInt::one() << 5000u32);
        let b = BigInt::from(7) * (BigInt::one() << 5000u32);
        let r = BigRational::new(a, b);
        assert!((ratio_to_f64(&r) - 3.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_to_f64_matches_small_values() {
        for v in [0.0, 1.0, -0.125, 0.3, 17.25, -1e-12] {
            let r = BigRational::from_f64(v).unwrap();
            assert_eq!(ratio_to_f64(&r), v);
        }
    }

    #[test]
    fn dyadic_roundtrip() {
        for z in [0.0, 1.0, 0.5, 0.2, 3.75, 1e-10, 12345.678] {
            let (num, e) = f64_to_dyadic(z);
            let back = ratio_to_f64(&BigRational::new(
                BigInt::from_biguint(Sign::Plus, num),
                BigInt::one() << e,
            ));
            assert_eq!(back, z);
        }
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), BigInt::one());
        assert_eq!(factorial(5), BigInt::from(120));
        assert_eq!(falling_factorial(7, 3), BigInt::from(7 * 6 * 5));
        assert_eq!(falling_factorial(7, 0), BigInt::one());
    }
}
