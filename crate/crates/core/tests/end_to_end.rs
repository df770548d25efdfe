//! Whole-pipeline runs through the public API.

use holdim::cover::{build_structured_cover, verify_cover, CoverScale};
use holdim::embedding::{run_construction, CoverSource, EmbeddingStage, RunConfig};
use holdim::metric::{build_cantor, build_line, CantorSpec, Exact, FiniteMetricSpace};
use holdim::schedule::{exact_schedule, relaxed_schedule, ScheduleParams};
use holdim::verify::{brute_force_oracle, image_matrix, verify_construction, Precision, Status, VerifyConfig};
use num_rational::BigRational;
use proptest::prelude::*;

fn line(points: &[(i64, i64)]) -> FiniteMetricSpace {
    let pts: Vec<BigRational> = points.iter().map(|&(n, d)| Exact::new(n, d).0).collect();
    build_line(pts, "line").unwrap().normalize().unwrap()
}

fn exact_config() -> RunConfig {
    let mut cfg = RunConfig::new(3, CoverSource::Structured);
    cfg.stop_on_stabilization = true;
    cfg
}

#[test]
fn exact_five_points_with_oracle() {
    let s = line(&[(0, 1), (1, 5), (1, 2), (2, 3), (1, 1)]);
    let p = ScheduleParams::new(0, 1.0, 0.5, 8).unwrap();
    let c = run_construction(&s, &exact_schedule(&p, 3).unwrap(), &exact_config()).unwrap();
    assert!(c.stabilized_at.is_some());
    let rep = verify_construction(&s, &c, &VerifyConfig::default()).unwrap();
    assert!(rep.all_pass);
    assert_eq!(rep.get("biholder").unwrap().status, Status::Pass);
    // The oracle's optimal envelope sits inside the certified one.
    let imgs = image_matrix(&c.last().images);
    let prof = brute_force_oracle(&s, &imgs, c.tail_bound()).unwrap();
    let (a, b) = c.schedule.constants.holder_exponents();
    assert!(prof.injective);
    assert!(prof.within(c.schedule.lambda().unwrap(), a, b));
    assert!(prof.alpha >= 1.0 && prof.beta <= 1.0);
}

#[test]
fn relaxed_cantor_level_five() {
    let s = build_cantor(&CantorSpec::middle_third(5)).unwrap();
    let p = ScheduleParams::new(0, 1.0, 0.5, 8).unwrap();
    let sched = relaxed_schedule(&p, 512.0, 1.0 / 512.0, 3).unwrap();
    let c = run_construction(&s, &sched, &RunConfig::new(3, CoverSource::Structured)).unwrap();
    assert_eq!(c.depth(), 3);
    let rep = verify_construction(&s, &c, &VerifyConfig::default()).unwrap();
    for id in ["local_lipschitz", "separation", "edge_bound", "cauchy", "limit_tail"] {
        assert_eq!(rep.get(id).unwrap().status, Status::Pass, "{id}");
    }
    assert_eq!(rep.get("qmeasure").unwrap().status, Status::NotCertified);
}

#[test]
fn stage_dumps_round_trip() {
    let s = line(&[(0, 1), (1, 3), (1, 1)]);
    let p = ScheduleParams::new(0, 1.0, 0.5, 8).unwrap();
    let c = run_construction(&s, &exact_schedule(&p, 3).unwrap(), &exact_config()).unwrap();
    for st in &c.stages {
        let text = serde_json::to_string(&st.to_dump()).unwrap();
        let back = EmbeddingStage::from_dump(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(&back, st);
    }
    let dump = serde_json::to_string(&s.to_dump()).unwrap();
    let back = FiniteMetricSpace::from_dump(serde_json::from_str(&dump).unwrap()).unwrap();
    for x in 0..s.len() {
        for y in 0..s.len() {
            assert_eq!(back.dist(x, y), s.dist(x, y));
        }
    }
}

#[test]
fn rational_recheck_agrees_with_float() {
    let s = line(&[(0, 1), (3, 10), (7, 10), (1, 1)]);
    let p = ScheduleParams::new(0, 1.0, 0.5, 8).unwrap();
    let c = run_construction(&s, &exact_schedule(&p, 3).unwrap(), &exact_config()).unwrap();
    let f = verify_construction(&s, &c, &VerifyConfig::default()).unwrap();
    let r = verify_construction(&s, &c, &VerifyConfig { lemmas: None, precision: Precision::Rational }).unwrap();
    assert_eq!(f.all_pass, r.all_pass);
    for (a, b) in f.reports.iter().zip(&r.reports) {
        assert_eq!(a.status, b.status, "{}", a.lemma);
    }
}

#[test]
fn structured_cover_of_dumped_cantor_is_valid() {
    let s = build_cantor(&CantorSpec::middle_third(6)).unwrap();
    for k in 1..=6 {
        let c = build_structured_cover(&s, CoverScale::Level(k), 0.5).unwrap();
        assert!(verify_cover(&s, &c).is_valid(), "level {k}");
        assert_eq!(c.len(), 1 << k);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exact_runs_never_fail(raw in proptest::collection::btree_set(0i64..64, 2..=6)) {
        let pts: Vec<(i64, i64)> = raw.into_iter().map(|v| (v, 64)).collect();
        let s = line(&pts);
        let p = ScheduleParams::new(0, 1.0, 0.5, 8).unwrap();
        let c = run_construction(&s, &exact_schedule(&p, 3).unwrap(), &exact_config()).unwrap();
        let rep = verify_construction(&s, &c, &VerifyConfig::default()).unwrap();
        prop_assert!(rep.all_pass);
        prop_assert!(rep.reports.iter().all(|r| r.status == Status::Pass));
    }
}
