//! Property and invariant tests across modules: enclosure monotonicity and
//! convexity of g, scaling linearity, solver bracket certificates, activity
//! monotonicity of the pressure, coefficient sign patterns, criterion
//! implications, virial round trips, and finite-volume pressure limits.

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};

use tonks::expansions::{
    activity_coefficient, enumerate_multi_indices, exact_criterion, sufficient_criteria,
    truncated_pressure, CriterionId,
};
use tonks::finite_volume::xi_discrete;
use tonks::regime::{packing_fraction, pressure};
use tonks::virial::{activities_from_densities, densities, virial_pressure, DensityVector};
use tonks::{ActivityModel, EnsembleKind, Family};

fn entries_strategy(max_len: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(
        (0.05f64..max_len, 0.01f64..1.2f64),
        1..5,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_enclosures_are_monotone_and_convex(
        pairs in entries_strategy(5.0),
        t1 in -3.0f64..0.0,
        gap in 0.2f64..2.0,
    ) {
        let m = ActivityModel::finite(EnsembleKind::Continuous, &pairs).unwrap();
        let t2 = t1 + gap;
        let a = m.eval_g(t1, 0).unwrap();
        let b = m.eval_g(t2, 0).unwrap();
        // strict monotonicity of the enclosures (all lengths > 0 here)
        prop_assert!(a.upper() < b.value, "enclosures must separate: {a:?} vs {b:?}");
        // midpoint convexity with bounds folded in
        let mid = m.eval_g(0.5 * (t1 + t2), 0).unwrap();
        prop_assert!(
            mid.value <= 0.5 * (a.upper() + b.upper()) + 1e-12,
            "convexity violated"
        );
    }

    #[test]
    fn scaled_factors_out(
        pairs in entries_strategy(5.0),
        theta in -2.0f64..1.0,
    ) {
        let base = Family::Finite {
            entries: pairs
                .iter()
                .map(|&(length, z)| tonks::Entry { length, z })
                .collect(),
        };
        let plain = ActivityModel::continuous(base.clone()).unwrap();
        let want = plain.eval_g(theta, 0).unwrap();
        for t in [0.0, 0.5, 1.0, 2.0] {
            let scaled = ActivityModel::continuous(Family::Scaled {
                t,
                base: Box::new(base.clone()),
            })
            .unwrap();
            let got = scaled.eval_g(theta, 0).unwrap();
            prop_assert!(
                (got.value - t * want.value).abs() <= got.bound + t * want.bound + 1e-12
            );
        }
    }

    #[test]
    fn derivative_matches_central_difference(
        pairs in entries_strategy(4.0),
        theta in -2.0f64..0.5,
    ) {
        let m = ActivityModel::finite(EnsembleKind::Continuous, &pairs).unwrap();
        let h = 1e-5;
        let fd = (m.eval_g(theta + h, 0).unwrap().value
            - m.eval_g(theta - h, 0).unwrap().value)
            / (2.0 * h);
        let d = m.eval_g(theta, 1).unwrap().value;
        // O(h^2) truncation with a curvature-sized constant
        let curv = m.eval_g(theta + h, 2).unwrap().value.abs() + 1.0;
        prop_assert!((fd - d).abs() < 10.0 * h * h * curv + 1e-9, "fd {fd} vs {d}");
    }

    #[test]
    fn pressure_solves_equation_and_brackets_root(
        pairs in entries_strategy(6.0),
        discrete in any::<bool>(),
    ) {
        let kind = if discrete { EnsembleKind::Discrete } else { EnsembleKind::Continuous };
        let pairs: Vec<(f64, f64)> = if discrete {
            pairs.iter().map(|&(l, z)| (l.ceil().max(1.0), z)).collect()
        } else {
            pairs
        };
        let m = ActivityModel::finite(kind, &pairs).unwrap();
        let sol = pressure(&m).unwrap();
        prop_assert!(sol.residual.abs() < 1e-10);
        // residual changes sign across the certified bracket and decreases
        let resid = |p: f64| {
            let g = m.eval_g(-p, 0).unwrap().value;
            match kind {
                EnsembleKind::Continuous => g - p,
                EnsembleKind::Discrete => g - (1.0 - (-p).exp()),
            }
        };
        let (lo, hi) = sol.bracket;
        prop_assert!(lo <= sol.p && sol.p <= hi);
        if lo > 0.0 {
            prop_assert!(resid(lo * (1.0 - 1e-9)) >= -1e-9);
        }
        prop_assert!(resid(hi + 1e-6) < 0.0);
        // monotone decrease on samples: exactly one crossing
        let mut prev = f64::INFINITY;
        for i in 0..=8 {
            let p = 1e-6 + (hi + 0.5 - 1e-6) * f64::from(i) / 8.0;
            let r = resid(p);
            prop_assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn pressure_increases_with_activity_scale(pairs in entries_strategy(5.0)) {
        let base = Family::Finite {
            entries: pairs
                .iter()
                .map(|&(length, z)| tonks::Entry { length, z })
                .collect(),
        };
        let mut prev = -1.0;
        for t in [0.5, 1.0, 1.5] {
            let m = ActivityModel::continuous(Family::Scaled {
                t,
                base: Box::new(base.clone()),
            })
            .unwrap();
            let p = pressure(&m).unwrap().p;
            prop_assert!(p > prev, "pressure must increase with t: {p} after {prev}");
            prev = p;
        }
    }

    #[test]
    fn coefficient_signs_alternate_with_order(
        counts in prop::collection::vec(1u32..4u32, 1..3),
        discrete in any::<bool>(),
    ) {
        let kind = if discrete { EnsembleKind::Discrete } else { EnsembleKind::Continuous };
        let lengths: Vec<BigRational> = (1..=counts.len())
            .map(|k| BigRational::from_usize(k).unwrap())
            .collect();
        let n = tonks::expansions::MultiIndex::new(
            counts.iter().enumerate().map(|(i, &c)| (i, c)),
        )
        .unwrap();
        let coeff = activity_coefficient(kind, &lengths, &n).unwrap();
        let m = n.order();
        let expected_nonneg = m % 2 == 1;
        prop_assert_eq!(coeff.is_negative(), !expected_nonneg && !coeff.is_zero());
    }

    #[test]
    fn sufficient_criteria_imply_exact(
        pairs in entries_strategy(4.0),
        discrete in any::<bool>(),
    ) {
        let kind = if discrete { EnsembleKind::Discrete } else { EnsembleKind::Continuous };
        let pairs: Vec<(f64, f64)> = if discrete {
            pairs.iter().map(|&(l, z)| (l.ceil().max(1.0), z * 0.3)).collect()
        } else {
            pairs.iter().map(|&(l, z)| (l, z * 0.3)).collect()
        };
        let m = ActivityModel::finite(kind, &pairs).unwrap();
        let exact = exact_criterion(&m).unwrap();
        for r in sufficient_criteria(&m).unwrap() {
            if r.criterion_id == CriterionId::LossNetwork {
                continue; // the loss-network region is not inside the exact domain
            }
            if r.holds {
                prop_assert!(
                    exact.holds,
                    "{} holds but the exact criterion fails (margin {})",
                    r.criterion_id,
                    exact.margin
                );
            }
        }
    }
}

#[test]
fn virial_roundtrips_and_identities() {
    let mut rng = StdRng::seed_from_u64(0x1234);
    for i in 0..100 {
        let kind = if i % 2 == 0 { EnsembleKind::Continuous } else { EnsembleKind::Discrete };
        let n = rng.gen_range(1..=5usize);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let l = match kind {
                    EnsembleKind::Discrete => rng.gen_range(1..=6) as f64,
                    EnsembleKind::Continuous => rng.gen_range(0.1..6.0),
                };
                (l, rng.gen_range(0.01..1.5))
            })
            .collect();
        let m = ActivityModel::finite(kind, &pairs).unwrap();
        let sol = pressure(&m).unwrap();
        let d = densities(&m).unwrap();

        // virial identity: pressure from densities equals the fixed point
        let pv = virial_pressure(kind, &d).unwrap();
        assert!((pv - sol.p).abs() < 1e-10, "virial identity: {pv} vs {}", sol.p);

        // packing identity
        let sigma = packing_fraction(&m).unwrap();
        assert!((d.occupied_fraction() - sigma).abs() < 1e-10);

        // activity round trip, relative 1e-9
        let back = activities_from_densities(kind, &d).unwrap();
        let orig = m.finite_entries().unwrap();
        for (a, b) in orig.iter().zip(&back) {
            assert!(
                (a.z - b.z).abs() <= 1e-9 * a.z.abs().max(1e-12),
                "activity roundtrip: {} vs {}",
                a.z,
                b.z
            );
        }

        // density round trip through a fresh model
        let pairs2: Vec<(f64, f64)> = back.iter().map(|e| (e.length, e.z)).collect();
        let back_d = densities(&ActivityModel::finite(kind, &pairs2).unwrap()).unwrap();
        for (a, b) in d.entries().iter().zip(back_d.entries()) {
            assert!((a.rho - b.rho).abs() <= 1e-9 * a.rho.max(1e-12));
        }
    }
}

#[test]
fn densities_match_finite_difference_of_pressure() {
    let mut rng = StdRng::seed_from_u64(0xFD);
    for _ in 0..20 {
        let n = rng.gen_range(1..=4usize);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.2..4.0), rng.gen_range(0.05..1.0)))
            .collect();
        let m = ActivityModel::finite(EnsembleKind::Continuous, &pairs).unwrap();
        let d = densities(&m).unwrap();
        for (k, e) in d.entries().iter().enumerate() {
            let z = pairs[k].1;
            let h = 1e-6 * z;
            let mut up = pairs.clone();
            up[k].1 = z + h;
            let mut dn = pairs.clone();
            dn[k].1 = z - h;
            // Difference quotients need the root to machine precision, not
            // just the default 1e-12 residual.
            let solve = |ps: &[(f64, f64)]| {
                tonks::regime::pressure_with(
                    &ActivityModel::finite(EnsembleKind::Continuous, ps).unwrap(),
                    1e-16,
                )
                .unwrap()
                .p
            };
            let p_up = solve(&up);
            let p_dn = solve(&dn);
            let fd = z * (p_up - p_dn) / (2.0 * h);
            assert!(
                (fd - e.rho).abs() <= 1e-5 * e.rho.max(1e-8),
                "rho_{k}: fd {fd} vs {}",
                e.rho
            );
        }
    }
}

#[test]
fn series_approaches_solver_inside_convergence_domain() {
    // Two mixtures safely inside the exact criterion, one per ensemble.
    let cases: [(EnsembleKind, Vec<(f64, f64)>); 2] = [
        (EnsembleKind::Continuous, vec![(1.0, 0.1), (2.0, 0.02)]),
        (EnsembleKind::Discrete, vec![(1.0, 0.2), (2.0, 0.04)]),
    ];
    for (kind, pairs) in cases {
        let m = ActivityModel::finite(kind, &pairs).unwrap();
        let report = exact_criterion(&m).unwrap();
        assert!(report.holds && report.margin < -1e-3, "test model must be interior");
        let p = pressure(&m).unwrap().p;
        let species: Vec<usize> = (0..pairs.len()).collect();
        let mut prev = f64::INFINITY;
        for degree in [4, 8, 12, 16, 20, 24] {
            let (s, _) = truncated_pressure(&m, &species, degree).unwrap();
            let err = (s - p).abs();
            assert!(err < prev, "tail must shrink: {err} after {prev} (degree {degree})");
            prev = err;
        }
        assert!(prev < 1e-8, "degree-24 truncation error {prev}");
    }
}

#[test]
fn lattice_pressure_limit_with_renewal_correction() {
    let mut rng = StdRng::seed_from_u64(0x71AB);
    for _ in 0..5 {
        let n = rng.gen_range(1..=3usize);
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(1..=4) as f64, rng.gen_range(0.05..1.2)))
            .collect();
        let m = ActivityModel::finite(EnsembleKind::Discrete, &pairs).unwrap();
        let p = pressure(&m).unwrap().p;
        let z1 = m
            .finite_entries()
            .unwrap()
            .iter()
            .filter(|e| e.length == 1.0)
            .map(|e| e.z)
            .sum::<f64>();
        let xi = (-p).exp();
        let mut mu = (1.0 + z1) * xi;
        for e in m.finite_entries().unwrap() {
            if e.length >= 2.0 {
                mu += e.length * e.z * xi.powf(e.length);
            }
        }
        let mut prev = f64::INFINITY;
        for l in [50u64, 100, 200] {
            let v = xi_discrete(&m, l).unwrap();
            let err = (v.ln() / l as f64 - p).abs();
            assert!(
                err <= 5.0 / l as f64 * mu.ln().abs() + 1e-9,
                "pressure limit at L={l}: {err}"
            );
            assert!(err <= prev + 1e-12, "accuracy must improve with L");
            prev = err;
        }
    }
}

#[test]
fn close_packing_histogram_concentrates_at_full_packing() {
    // Scaled stretched-exponential activities on the lattice with a small
    // prefactor sit in the close-packing regime; the finite-L histogram mass
    // below 1 - eps must decay as L grows. Species longer than L cannot fit,
    // so truncating at length L loses nothing.
    use tonks::finite_volume::packing_distribution;
    use tonks::regime::{classify, Regime};

    let probe = ActivityModel::discrete(Family::Scaled {
        t: 0.01,
        base: Box::new(Family::StretchedExp { mu: 1.0 }),
    })
    .unwrap();
    assert_eq!(classify(&probe).unwrap().regime, Regime::ClosePacking);

    let mut prev = f64::INFINITY;
    for l in [40u64, 80, 120] {
        let pairs: Vec<(f64, f64)> = (1..=l)
            .map(|k| {
                let kf = k as f64;
                (kf, 0.01 * (kf - kf.sqrt()).exp())
            })
            .collect();
        let m = ActivityModel::finite(EnsembleKind::Discrete, &pairs).unwrap();
        let h = packing_distribution(&m, l as f64).unwrap();
        let below: f64 = h
            .points
            .iter()
            .filter(|&&(s, _)| s < 0.95)
            .map(|&(_, mass)| mass)
            .sum();
        assert!(below < prev, "mass below 0.95 must decay: {below} after {prev} (L={l})");
        prev = below;
    }
    assert!(prev < 0.05, "close-packing tail at L=120: {prev}");
}

#[test]
fn graded_enumeration_matches_counts() {
    // |{n : order <= D, s species}| = C(D+s, s) - 1
    for s in 1..=4usize {
        for d in 1..=6u32 {
            let species: Vec<usize> = (0..s).collect();
            let got = enumerate_multi_indices(&species, d).unwrap().len();
            let mut want = 1usize;
            for i in 1..=s {
                want = want * (d as usize + i) / i;
            }
            assert_eq!(got, want - 1, "s={s} d={d}");
        }
    }
}

#[test]
fn density_vector_surface_checks() {
    let d = DensityVector::from_pairs(&[(1.0, 0.25), (2.0, 0.1)]).unwrap();
    assert!((d.total_number() - 0.35).abs() < 1e-15);
    assert!((d.occupied_fraction() - 0.45).abs() < 1e-15);
    assert!(DensityVector::from_pairs(&[(1.0, -0.1)]).is_err());
    assert!(DensityVector::from_pairs(&[(1.0, f64::NAN)]).is_err());
}

#[test]
fn infinite_family_densities_satisfy_totals() {
    // Adaptively truncated per-species densities must reproduce the exact
    // totals Σρ = p(1-σ) and Σℓρ = σ computed from the tail-bounded sums.
    let m = ActivityModel::continuous(Family::StretchedExp { mu: 0.5 }).unwrap();
    let p = pressure(&m).unwrap().p;
    let sigma = packing_fraction(&m).unwrap();
    let d = densities(&m).unwrap();
    assert!(d.entries().len() >= 8);
    assert!((d.total_number() - p * (1.0 - sigma)).abs() < 1e-9);
    assert!((d.occupied_fraction() - sigma).abs() < 1e-9);
}

/// Fixture for the norm gap between density and activity sequences: a
/// density family that decays like e^{-bk} inverts to activities that decay
/// strictly slower, at rate b - p with p > 0. Inverting between weighted-l1
/// spaces with the *same* exponential weight is therefore impossible: the
/// activity norm Σ z_k e^{ak} needs a ≤ b - p while densities live at b.
#[test]
fn density_activity_norm_gap_fixture() {
    let b = 0.5f64;
    let eps = 0.1f64;
    let k_max = 120usize;
    let rho: Vec<(f64, f64)> = (1..=k_max)
        .map(|k| {
            let kf = k as f64;
            (kf, eps * kf.powi(-3) * (-b * kf).exp())
        })
        .collect();
    let d = DensityVector::from_pairs(&rho).unwrap();
    let p = virial_pressure(EnsembleKind::Continuous, &d).unwrap();
    assert!(p > 0.0);
    let z = activities_from_densities(EnsembleKind::Continuous, &d).unwrap();
    // Fit the exponential decay rates with the k^{-3} factor divided out;
    // what remains is exactly linear in k.
    let rate = |v: &[f64]| {
        let n = v.len();
        (v[n - 1] - v[n - 31]) / 30.0
    };
    let log_rho: Vec<f64> = rho
        .iter()
        .map(|&(k, r)| -(r * k.powi(3)).ln())
        .collect();
    let log_z: Vec<f64> = z
        .iter()
        .map(|e| -(e.z * e.length.powi(3)).ln())
        .collect();
    let rho_rate = rate(&log_rho);
    let z_rate = rate(&log_z);
    // densities decay at b, activities strictly slower at b - p
    assert!((rho_rate - b).abs() < 1e-9, "density rate {rho_rate}");
    assert!((z_rate - (b - p)).abs() < 1e-9, "activity rate {z_rate} vs {}", b - p);
    assert!(z_rate < rho_rate - 0.9 * p);
}
