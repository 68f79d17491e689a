//! Quantitative behavior of the activity expansion around its convergence
//! boundary: where the truncation error actually drops below 1e-10, and
//! where the divergent coefficient sums actually cross 1e3. These pin the
//! constants that hold, next to the acceptance criteria that assert the
//! stated ones.

use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive};

use tonks::expansions::{activity_coefficient, truncated_pressure, MultiIndex};
use tonks::regime::pressure;
use tonks::{ActivityModel, EnsembleKind};

#[test]
fn truncation_error_drops_below_1e10_at_degree_28() {
    // Continuous monomer z = 0.2: the series is alternating with first
    // omitted term n^{n-1} z^n / n!; at D = 25 the tail is ~2.6e-10 and it
    // crosses 1e-10 between D = 26 and D = 27.
    let m = ActivityModel::finite(EnsembleKind::Continuous, &[(1.0, 0.2)]).unwrap();
    let p = pressure(&m).unwrap().p;
    let mut prev = f64::INFINITY;
    let mut first_below = None;
    for d in 20..=30u32 {
        let (s, _) = truncated_pressure(&m, &[0], d).unwrap();
        let err = (s - p).abs();
        assert!(err < prev, "alternating tail must shrink: {err} after {prev}");
        if first_below.is_none() && err < 1e-10 {
            first_below = Some(d);
        }
        prev = err;
    }
    assert_eq!(first_below, Some(27));
    let (s28, _) = truncated_pressure(&m, &[0], 28).unwrap();
    assert!((s28 - p).abs() < 1e-10);

    // Discrete monomer z = 0.5 against log 1.5.
    let m = ActivityModel::finite(EnsembleKind::Discrete, &[(1.0, 0.5)]).unwrap();
    let want = 1.5f64.ln();
    let (s25, _) = truncated_pressure(&m, &[0], 25).unwrap();
    assert!((s25 - want).abs() > 1e-10, "D=25 sits above 1e-10 ({:.3e})", (s25 - want).abs());
    let (s28, _) = truncated_pressure(&m, &[0], 28).unwrap();
    assert!((s28 - want).abs() < 1e-10);
}

/// Partial sums of |a_n| z^n for the continuous monomer, exact coefficients.
fn divergent_partial_sums(z: f64, max_degree: u32) -> Vec<f64> {
    let zq = BigRational::from_f64(z).unwrap();
    let lengths = vec![BigRational::one()];
    let mut out = Vec::with_capacity(max_degree as usize);
    let mut acc = 0.0f64;
    for d in 1..=max_degree {
        let n = MultiIndex::new([(0usize, d)]).unwrap();
        let coeff = activity_coefficient(EnsembleKind::Continuous, &lengths, &n)
            .unwrap()
            .abs();
        let mut term = coeff;
        for _ in 0..d {
            term *= &zq;
        }
        acc += term.to_f64().unwrap_or(f64::INFINITY);
        out.push(acc);
    }
    out
}

#[test]
fn divergent_sums_cross_1e3_where_the_growth_rate_says() {
    // z = 0.6 (0.6e ≈ 1.63 per step): crosses 1e3 at degree 24, well
    // before 60.
    let sums = divergent_partial_sums(0.6, 60);
    let first = sums.iter().position(|&s| s > 1e3).map(|i| i + 1);
    assert_eq!(first, Some(24));
    assert!(sums[59] > 1e9);

    // z = 0.4 (0.4e ≈ 1.087 per step): still small at degree 60, crosses
    // 1e3 at degree 152.
    let sums = divergent_partial_sums(0.4, 160);
    assert!(sums[59] < 10.0, "degree-60 partial sum is {:.4}", sums[59]);
    let first = sums.iter().position(|&s| s > 1e3).map(|i| i + 1);
    assert_eq!(first, Some(152));
}

#[test]
fn convergent_sums_stay_bounded_by_the_witness() {
    // Inside the exact domain the all-positive sums converge below the
    // witness a (the series value is the smallest fixed point).
    let z = 0.3; // < 1/e
    let sums = divergent_partial_sums(z, 120);
    let report = tonks::expansions::exact_criterion(
        &ActivityModel::finite(EnsembleKind::Continuous, &[(1.0, z)]).unwrap(),
    )
    .unwrap();
    assert!(report.holds);
    let witness = report.witness_a.unwrap();
    assert!(sums[119] <= witness, "positive sums ({}) exceed the witness {witness}", sums[119]);
    // and the positive series solves F = z e^F: F is the smaller root
    let f = sums[119];
    assert!((z * f.exp() - f).abs() < 1e-6, "fixed point residual {}", z * f.exp() - f);
}
