use proptest::prelude::*;

use super::*;
use crate::metric::{build_cantor, build_cube_grid, build_product_grid, build_random, CantorSpec};

fn dyadic(ks: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    ks.map(|k| 2f64.powi(-k)).collect()
}

#[test]
fn cantor_counts_are_powers_of_two() {
    let c = build_cantor(&CantorSpec::middle_third(10)).unwrap();
    let r = box_dimension(&c, &triadic_scales(1..=8)).unwrap();
    assert_eq!(r.method, CoverMethod::LineSweep);
    assert_eq!(r.counts, (1..=8).map(|k| 1usize << k).collect::<Vec<_>>());
    assert!((r.slope - LOG2_OVER_LOG3).abs() < 0.02);
    assert!(r.residual < 1e-9);
    assert!(r.warnings.is_empty());
}

#[test]
fn interval_slope_is_one() {
    // 1024 points with step 1/1023: a cluster of diameter 2^-k holds 2^(10-k) of them.
    let i = build_cube_grid(1, 1024).unwrap();
    let r = box_dimension(&i, &dyadic(2..=8)).unwrap();
    assert_eq!(r.counts, (2..=8).map(|k| 1usize << k).collect::<Vec<_>>());
    assert!((r.slope - 1.0).abs() < 0.02);
}

#[test]
fn cantor_times_interval() {
    let s = build_product_grid(&CantorSpec::middle_third(5), 1, 243).unwrap();
    let r = box_dimension(&s, &triadic_scales(1..=4)).unwrap();
    assert_eq!(r.method, CoverMethod::AnchoredBoxes);
    assert_eq!(r.counts, (1..=4).map(|k| 6usize.pow(k)).collect::<Vec<_>>());
    assert!((r.slope - (1.0 + LOG2_OVER_LOG3)).abs() < 0.03);
}

#[test]
fn snowflaked_cantor_has_slope_one() {
    let c = build_cantor(&CantorSpec::middle_third(10)).unwrap();
    let sf = snowflake(&c, LOG2_OVER_LOG3).unwrap();
    let r = box_dimension(&sf, &dyadic(1..=8)).unwrap();
    assert!((r.slope - 1.0).abs() < 0.03, "{r:?}");
}

#[test]
fn half_snowflake_doubles_interval() {
    let i = build_cube_grid(1, 1024).unwrap();
    let sf = snowflake(&i, 0.5).unwrap();
    let scales: Vec<f64> = dyadic(2..=8).into_iter().map(f64::sqrt).collect();
    let r = box_dimension(&sf, &scales).unwrap();
    assert!((r.slope - 2.0).abs() < 0.05, "{r:?}");
}

#[test]
fn measure_sums_track_the_exponent() {
    let c = build_cantor(&CantorSpec::middle_third(10)).unwrap();
    let r = box_dimension_with_measure(&c, &triadic_scales(1..=6), Some(LOG2_OVER_LOG3)).unwrap();
    // 2^k clusters of diameter 3^-k: each sum is 1.
    for m in r.measure_at_scale.unwrap() {
        assert!((m - 1.0).abs() < 1e-9, "{m}");
    }
}

#[test]
fn scale_preconditions() {
    let c = build_cantor(&CantorSpec::middle_third(4)).unwrap();
    assert_eq!(box_dimension(&c, &[0.5, 0.4, 0.3]), Err(DimensionError::TooFewScales(3)));
    assert!(matches!(box_dimension(&c, &[0.5, 0.4, 0.3, 0.2]), Err(DimensionError::NarrowRange(_))));
    assert_eq!(box_dimension(&c, &[0.5, 0.4, 0.0, 0.1]), Err(DimensionError::BadScale));
    let r = box_dimension(&c, &triadic_scales(1..=7)).unwrap();
    assert!(!r.warnings.is_empty());
}

#[test]
fn geometric_scales_hit_endpoints() {
    let s = geometric_scales(1.0, 1.0 / 64.0, 7).unwrap();
    for (k, r) in s.iter().enumerate() {
        assert!((r - 2f64.powi(-(k as i32))).abs() < 1e-12);
    }
    assert!(geometric_scales(1.0, 2.0, 4).is_err());
}

#[test]
fn least_squares_recovers_a_line() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
    let (a, b, rms) = least_squares(&xs, &ys);
    assert!((a - 2.5).abs() < 1e-12 && (b + 1.0).abs() < 1e-12 && rms < 1e-12);
}

#[test]
fn hypercurve_constants_for_identity() {
    let c = hypercurve_certificate(1.0, 1.0, 1, 1.0).unwrap();
    assert_eq!(c.b, 1.0);
    assert!((c.lower_bound - 1.630_929_753_571_457).abs() < 1e-12);
    assert!((c.a - 2f64.powf(LOG2_OVER_LOG3)).abs() < 1e-12);
    let c2 = hypercurve_certificate(2.0, 2.0, 2, 1.0).unwrap();
    assert!((c2.b - 1.0 / 8.0).abs() < 1e-12);
    assert!((c2.lower_bound - (2.0 + LOG2_OVER_LOG3 / 2.0)).abs() < 1e-12);
    assert!(hypercurve_certificate(0.5, 1.0, 1, 1.0).is_err());
}

#[test]
fn nu_is_order_one() {
    let nu = estimate_nu(8).unwrap();
    // The whole set in a ball of radius 1 already gives 2^-s.
    assert!(nu.value >= 2f64.powf(-LOG2_OVER_LOG3) - 1e-12);
    assert!(nu.value < 2.0, "{nu:?}");
}

#[test]
fn identity_projection_is_onto_the_grid() {
    let s = build_product_grid(&CantorSpec::middle_third(3), 1, 9).unwrap();
    let img = identity_candidate(&s).unwrap();
    let rep = projection_surjectivity_check(&s, &img, 1.0, None, 1 << 20, 0).unwrap();
    assert!(rep.holds, "{rep:?}");
    assert_eq!(rep.density_gap, 0.0);
    assert!(rep.face_violations.is_empty());
    assert!(rep.psi_lipschitz <= 1.0 + 1e-12);
}

#[test]
fn shrunk_candidate_misses_the_far_face() {
    let s = build_product_grid(&CantorSpec::middle_third(3), 1, 9).unwrap();
    let img: Vec<Vec<f64>> = identity_candidate(&s).unwrap().into_iter().map(|p| p.into_iter().map(|v| v / 2.0).collect()).collect();
    let rep = projection_surjectivity_check(&s, &img, 1.0, None, 1000, 7).unwrap();
    assert!(!rep.holds);
    assert!(rep.face_violations.iter().any(|v| v.face == "O"));
    assert_eq!(rep.pairs, 1000);
}

#[test]
fn sampled_measure_exceeds_b_over_a() {
    let s = build_product_grid(&CantorSpec::middle_third(5), 1, 243).unwrap();
    let nu = estimate_nu(8).unwrap();
    let cert = hypercurve_certificate(1.0, 1.0, 1, nu.value).unwrap();
    let scales: Vec<f64> = (1..=4).map(|k| 2f64.sqrt() * 3f64.powi(-k)).collect();
    let chk = hypercurve_sampled_check(&s, &cert, &scales).unwrap();
    assert!(chk.holds, "{chk:?}");
    for m in &chk.scales {
        assert!(m.corrected >= m.sum);
    }
}

#[test]
fn product_checks_reject_other_spaces() {
    let c = build_cantor(&CantorSpec::middle_third(3)).unwrap();
    assert!(identity_candidate(&c).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn clusters_partition_and_respect_diameter(seed in 0u64..1000, dim in 1usize..4, r in 0.05f64..0.8) {
        let s = build_random(40, dim, seed).unwrap();
        let cl = greedy_clusters(&s, r);
        let mut seen = vec![false; s.len()];
        for c in &cl {
            prop_assert!(cluster_diameter(&s, c) <= r * (1.0 + 1e-6));
            for &x in c {
                prop_assert!(!seen[x]);
                seen[x] = true;
            }
        }
        prop_assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn counts_shrink_with_scale(seed in 0u64..1000) {
        let s = build_random(60, 2, seed).unwrap();
        let r = box_dimension(&s, &geometric_scales(0.8, 0.05, 5).unwrap()).unwrap();
        prop_assert!(r.slope.is_finite());
        prop_assert!(r.counts.iter().all(|c| (1..=60).contains(c)));
    }
}
