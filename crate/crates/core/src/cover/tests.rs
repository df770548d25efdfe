use num_rational::BigRational;
use proptest::prelude::*;

use super::*;
use crate::metric::{build_cantor, build_cube_grid, build_line, build_product_grid, build_random, CantorSpec};

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn grid33() -> FiniteMetricSpace {
    build_cube_grid(1, 33).unwrap()
}

#[test]
fn weight_examples() {
    let s = build_cantor(&CantorSpec::middle_third(1)).unwrap();
    let u = CoverSet::new(vec![0, 1], 0);
    assert!((weight(&s, &u, 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(weight(&s, &u, 3).unwrap(), 0.0);
    let all = CoverSet::new(vec![0, 1, 2, 3], 0);
    assert!(matches!(weight(&s, &all, 0), Err(CoverError::FullSpace { .. })));
}

#[test]
fn fast_line_weights_match_brute_force() {
    let s = build_cantor(&CantorSpec::middle_third(3)).unwrap();
    let members = vec![0, 1, 2, 5, 6, 7, 12];
    let fast = member_weights(&s, &members, LineIndex::of(&s).as_ref());
    let slow = member_weights(&s, &members, None);
    assert_eq!(fast, slow);
}

#[test]
fn greedy_two_points() {
    let s = build_line(vec![q(0, 1), q(1, 1)], "pair").unwrap();
    let c = build_greedy_cover(&s, 1.0, 0.4).unwrap();
    assert!(c.certs.multiplicity <= 2);
    assert!(verify_cover(&s, &c).is_valid());
}

#[test]
fn greedy_cantor_recovers_level_two_intervals() {
    let s = build_cantor(&CantorSpec::middle_third(4)).unwrap();
    let c = build_greedy_cover(&s, 1.0 / 9.0, 1.0 / 3.0).unwrap();
    assert_eq!(c.len(), 4);
    assert_eq!(c.certs.multiplicity, 1);
    for (i, set) in c.sets.iter().enumerate() {
        assert_eq!(set.members, (8 * i..8 * i + 8).collect::<Vec<_>>());
    }
}

#[test]
fn greedy_interval_grid_overlaps_twice() {
    let s = grid33();
    let c = build_greedy_cover(&s, 0.25, 0.125).unwrap();
    assert_eq!(c.certs.multiplicity, 2);
    assert!(c.certs.lebesgue >= 0.25 / 4.0 - 1e-12);
    let rep = verify_cover(&s, &c);
    assert!(rep.is_valid() && rep.certified, "{rep:?}");
}

#[test]
fn greedy_reports_lebesgue_shortfall() {
    // On a fine grid no set of diameter 1/4 keeps every point 0.9/4 from its edge.
    let s = grid33();
    match build_greedy_cover(&s, 0.25, 0.9) {
        Err(CoverError::LebesgueShortfall { achieved, required, cover }) => {
            assert!(achieved < required);
            assert_eq!(cover.certs.lebesgue, achieved);
        }
        other => panic!("expected shortfall, got {other:?}"),
    }
}

#[test]
fn structured_cantor_level_two() {
    let s = build_cantor(&CantorSpec::middle_third(5)).unwrap();
    let c = build_structured_cover(&s, CoverScale::Level(2), 0.5).unwrap();
    assert_eq!(c.len(), 4);
    assert!(c.sets.iter().all(|x| x.color == 0));
    assert_eq!(c.certs.multiplicity, 1);
    assert!(c.certs.mesh <= 1.0 / 9.0 + 1e-15);
    assert!(c.certs.lebesgue >= 1.0 / 9.0 - 1e-15);
}

#[test]
fn structured_interval_half() {
    let s = grid33();
    let c = build_structured_cover(&s, CoverScale::Delta(0.5), 0.25).unwrap();
    assert_eq!(c.len(), 5);
    assert_eq!(c.certs.multiplicity, 2);
    assert!(c.certs.lebesgue >= 0.125 - 1e-15);
    assert!(c.certs.mesh <= 0.5);
    assert!(verify_cover(&s, &c).is_valid());
}

#[test]
fn structured_product_multiplicity_is_two() {
    let s = build_product_grid(&CantorSpec::middle_third(3), 1, 17).unwrap();
    let c = build_structured_cover(&s, CoverScale::Delta(0.25), 0.2).unwrap();
    assert_eq!(c.certs.multiplicity, 2);
    assert!(c.certs.mesh <= 0.25 * (1.0 + 1e-12));
    let rep = verify_cover(&s, &c);
    assert!(rep.coloring_conflicts.is_empty() && rep.covering && rep.discrepancies.is_empty());
}

#[test]
fn structured_rejects_unstructured_space() {
    let s = build_random(5, 2, 1).unwrap();
    assert!(matches!(build_structured_cover(&s, CoverScale::Level(1), 0.5), Err(CoverError::NoStructure(_))));
}

#[test]
fn refine_cantor_level_three() {
    let s = build_cantor(&CantorSpec::middle_third(5)).unwrap();
    let base = build_structured_cover(&s, CoverScale::Delta(1.0 / 27.0), 1.0 / 3.0).unwrap();
    let out = size_controlled_refine(&s, &base, 4).unwrap();
    assert!(out.bound_holds && out.net_bound_holds);
    assert!(out.cover.sets.iter().all(|x| base.sets.contains(x)));
    assert!(out.cover.certs.lebesgue >= base.sigma * base.target_delta / 2.0 - 1e-15);
    assert_eq!(out.cover.sigma, base.sigma / 2.0);
}

#[test]
fn refine_fails_on_false_certificate() {
    let s = grid33();
    let mut base = build_structured_cover(&s, CoverScale::Delta(0.25), 0.2).unwrap();
    base.sigma = 0.9;
    assert!(matches!(size_controlled_refine(&s, &base, 2), Err(CoverError::SnapFailed { .. })));
}

#[test]
fn verify_flags_full_space_and_redundancy() {
    let s = build_cantor(&CantorSpec::middle_third(1)).unwrap();
    let whole = ColoredCover {
        target_delta: 1.0,
        sigma: 0.5,
        sets: vec![CoverSet::new(vec![0, 1, 2, 3], 0)],
        certs: Certs { mesh: 1.0, lebesgue: 1.0, multiplicity: 1, color_count: 1 },
    };
    let rep = verify_cover(&s, &whole);
    assert_eq!(rep.full_space_sets, vec![0]);
    assert!(!rep.is_valid());

    let sets = vec![CoverSet::new(vec![0, 1], 0), CoverSet::new(vec![0], 1), CoverSet::new(vec![2, 3], 0)];
    let red = certify(&s, sets.clone(), 0.5, 0.5).unwrap();
    let rep = verify_cover(&s, &red);
    assert_eq!(rep.redundant_pairs.len(), 1);
    let mut pruned = sets;
    assert_eq!(prune_redundant(&s, &mut pruned, 0.0).unwrap(), 1);
    assert_eq!(pruned.len(), 2);
}

#[test]
fn verify_flags_tampered_certificate() {
    let s = grid33();
    let mut c = build_structured_cover(&s, CoverScale::Delta(0.25), 0.2).unwrap();
    c.certs.lebesgue *= 2.0;
    let rep = verify_cover(&s, &c);
    assert!(!rep.discrepancies.is_empty());
    assert!(!rep.lebesgue_ball_failures.is_empty());
}

#[test]
fn cantor_covers_meet_level_bounds() {
    let s = build_cantor(&CantorSpec::middle_third(6)).unwrap();
    for k in 1..6u32 {
        let w = 3f64.powi(-(k as i32));
        let c = build_structured_cover(&s, CoverScale::Level(k), 0.5).unwrap();
        assert!(c.certs.mesh <= w * (1.0 + 1e-12));
        assert!(c.certs.lebesgue >= w * (1.0 - 1e-12));
        assert_eq!(c.certs.multiplicity, 1);
        let rep = verify_cover(&s, &c);
        assert!(rep.is_valid(), "level {k}: {rep:?}");
    }
}

#[test]
fn weight_lemmas_hold_on_certified_covers() {
    let s = grid33();
    for d in [0.5, 0.25, 0.125] {
        let c = build_structured_cover(&s, CoverScale::Delta(d), 0.2).unwrap();
        assert!(check_weight_lemmas(&s, &c).unwrap().holds());
        let g = build_greedy_cover(&s, d, 0.2).unwrap();
        assert!(check_weight_lemmas(&s, &g).unwrap().holds());
    }
    let cantor = build_cantor(&CantorSpec::middle_third(4)).unwrap();
    let c = build_structured_cover(&cantor, CoverScale::Level(2), 0.5).unwrap();
    assert!(check_weight_lemmas(&cantor, &c).unwrap().holds());
}

#[test]
fn isolation_check_catches_engineered_overlap() {
    let pts: Vec<BigRational> = (0..=10).map(|k| q(k, 10)).collect();
    let s = build_line(pts, "ten").unwrap();
    let sets = vec![CoverSet::new((0..=5).collect(), 0), CoverSet::new(vec![5, 6], 1), CoverSet::new((6..=10).collect(), 0)];
    let c = certify(&s, sets, 0.1, 0.5).unwrap();
    let rep = check_weight_lemmas(&s, &c).unwrap();
    assert!(!rep.isolation_violations.is_empty());
}

fn random_line(seed: u64, count: usize) -> FiniteMetricSpace {
    build_random(count, 1, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weight_is_one_lipschitz(seed in 0u64..1000, count in 4usize..24, mask in 1u32..(1 << 20)) {
        let s = build_random(count, 2, seed).unwrap();
        let members: Vec<usize> = (0..count).filter(|&i| mask & (1 << (i % 20)) != 0).collect();
        prop_assume!(!members.is_empty() && members.len() < count);
        let u = CoverSet::new(members, 0);
        for x in 0..count {
            for y in 0..count {
                let (a, b) = (weight(&s, &u, x).unwrap(), weight(&s, &u, y).unwrap());
                prop_assert!((a - b).abs() <= s.dist(x, y) * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn greedy_covers_verify(seed in 0u64..500, count in 3usize..40, delta in 0.05f64..0.9, sigma in 0.02f64..0.2) {
        let s = random_line(seed, count);
        if let Ok(c) = build_greedy_cover(&s, delta, sigma) {
            let rep = verify_cover(&s, &c);
            prop_assert!(rep.is_valid(), "{:?}", rep);
            prop_assert!(rep.certified);
            prop_assert!(c.certs.multiplicity <= c.certs.color_count);
            prop_assert!(check_weight_lemmas(&s, &c).unwrap().holds());
        }
    }

    #[test]
    fn greedy_planar_covers_verify(seed in 0u64..500, count in 3usize..30, delta in 0.1f64..0.9) {
        let s = build_random(count, 2, seed).unwrap();
        if let Ok(c) = build_greedy_cover(&s, delta, 0.1) {
            let rep = verify_cover(&s, &c);
            prop_assert!(rep.is_valid(), "{:?}", rep);
        }
    }
}
